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

#pragma once

// Double-precision vector kernels behind every similarity, distance and
// covariance loop. Each kernel has a scalar reference and ISA-specific
// variants; the active table is picked once at startup from CPU features and
// may be pinned with RAGVAL_SIMD=scalar|avx2|neon.
//
// Every variant uses a fixed reduction order, so results are reproducible
// run to run on the same ISA. Variants agree with the scalar reference to a
// few ulps scaled by the vector length, not bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>

namespace ragval::simd {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*squared_distance)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

std::string_view isa_name(Isa isa);

// True when the variant is compiled in and the running CPU supports it.
bool isa_available(Isa isa);

// Throws InvalidArgument for an unavailable ISA.
const KernelTable& kernels_for(Isa isa);

Isa active_isa();

// Pins the active table. Tests use this to run paths under each ISA.
void set_active_isa(Isa isa);

namespace detail {
extern const KernelTable kScalarKernels;
#if defined(RAGVAL_HAVE_AVX2)
extern const KernelTable kAvx2Kernels;
#endif
#if defined(RAGVAL_HAVE_NEON)
extern const KernelTable kNeonKernels;
#endif
const KernelTable& active_table();
}  // namespace detail

inline double dot(std::span<const double> a, std::span<const double> b) {
  return detail::active_table().dot(a.data(), b.data(), a.size());
}

inline double squared_distance(std::span<const double> a,
                               std::span<const double> b) {
  return detail::active_table().squared_distance(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  detail::active_table().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace ragval::simd
