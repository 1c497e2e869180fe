// Copyright 2026 The ragval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <atomic>
#include <cstdlib>
#include <string>

#include "ragval/common/error.h"
#include "ragval/simd/kernels.h"

namespace ragval::simd {

namespace {

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(RAGVAL_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::kNeon:
#if defined(RAGVAL_HAVE_NEON)
      return true;  // Advanced SIMD is mandatory on AArch64.
#else
      return false;
#endif
  }
  return false;
}

Isa detect() {
  if (const char* env = std::getenv("RAGVAL_SIMD")) {
    const std::string want(env);
    if (want == "scalar") return Isa::kScalar;
    if (want == "avx2" && cpu_supports(Isa::kAvx2)) return Isa::kAvx2;
    if (want == "neon" && cpu_supports(Isa::kNeon)) return Isa::kNeon;
  }
  if (cpu_supports(Isa::kAvx2)) return Isa::kAvx2;
  if (cpu_supports(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

std::atomic<const KernelTable*> g_active{nullptr};
std::atomic<Isa> g_active_isa{Isa::kScalar};

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) { return cpu_supports(isa); }

const KernelTable& kernels_for(Isa isa) {
  if (!cpu_supports(isa)) {
    throw InvalidArgument("SIMD variant not available: " +
                          std::string(isa_name(isa)));
  }
  switch (isa) {
#if defined(RAGVAL_HAVE_AVX2)
    case Isa::kAvx2:
      return detail::kAvx2Kernels;
#endif
#if defined(RAGVAL_HAVE_NEON)
    case Isa::kNeon:
      return detail::kNeonKernels;
#endif
    default:
      return detail::kScalarKernels;
  }
}

Isa active_isa() {
  detail::active_table();
  return g_active_isa.load();
}

void set_active_isa(Isa isa) {
  const KernelTable& table = kernels_for(isa);
  g_active_isa.store(isa);
  g_active.store(&table);
}

namespace detail {

const KernelTable& active_table() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t != nullptr) return *t;
  const Isa isa = detect();
  const KernelTable* chosen = &kernels_for(isa);
  const KernelTable* expected = nullptr;
  if (g_active.compare_exchange_strong(expected, chosen)) {
    g_active_isa.store(isa);
    return *chosen;
  }
  return *expected;
}

}  // namespace detail

}  // namespace ragval::simd
