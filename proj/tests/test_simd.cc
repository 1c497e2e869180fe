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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ragval/common/random.h"
#include "ragval/simd/kernels.h"

namespace ragval::simd {
namespace {

std::vector<Isa> available() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon}) {
    if (isa_available(isa)) out.push_back(isa);
  }
  return out;
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

// Every variant agrees with the scalar reference on lengths that exercise the
// vector body and every tail length.
TEST(Simd, VariantsMatchScalarReference) {
  Rng rng(11);
  const KernelTable& ref = kernels_for(Isa::kScalar);
  for (Isa isa : available()) {
    const KernelTable& k = kernels_for(isa);
    for (std::size_t n = 0; n <= 67; ++n) {
      const auto a = random_vector(rng, n);
      const auto b = random_vector(rng, n);
      double mag = 0.0, sq = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        mag += std::abs(a[i] * b[i]);
        sq += (a[i] - b[i]) * (a[i] - b[i]);
      }
      EXPECT_NEAR(k.dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n),
                  1e-13 * (1.0 + mag))
          << isa_name(isa) << " n=" << n;
      EXPECT_NEAR(k.squared_distance(a.data(), b.data(), n),
                  ref.squared_distance(a.data(), b.data(), n), 1e-13 * (1.0 + sq))
          << isa_name(isa) << " n=" << n;
      std::vector<double> y1 = b, y2 = b;
      k.axpy(0.75, a.data(), y1.data(), n);
      ref.axpy(0.75, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-14 * (1 + std::abs(y2[i])));
    }
  }
}

TEST(Simd, ScalarReferenceMatchesNaiveLoops) {
  const std::vector<double> a = {1, 2, 3, 4, 5};
  const std::vector<double> b = {-1, 0.5, 2, 0, 1};
  const KernelTable& ref = kernels_for(Isa::kScalar);
  EXPECT_DOUBLE_EQ(ref.dot(a.data(), b.data(), 5), -1 + 1 + 6 + 0 + 5);
  EXPECT_DOUBLE_EQ(ref.squared_distance(a.data(), b.data(), 5), 4 + 2.25 + 1 + 16 + 16);
}

TEST(Simd, DispatchCanBePinned) {
  const Isa before = active_isa();
  set_active_isa(Isa::kScalar);
  EXPECT_EQ(active_isa(), Isa::kScalar);
  const std::vector<double> a = {3, 4};
  EXPECT_DOUBLE_EQ(dot(a, a), 25.0);
  set_active_isa(before);
  EXPECT_EQ(active_isa(), before);
}

}  // namespace
}  // namespace ragval::simd
