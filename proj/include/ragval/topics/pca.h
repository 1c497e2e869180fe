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

#include <cstddef>
#include <span>
#include <vector>

#include "ragval/common/matrix.h"

namespace ragval::topics {

// Result of projecting n x d data onto its top-r principal axes.
struct ReducedMatrix {
  Matrix rows;                              // n x r projected coordinates
  std::vector<double> explained_variance;  // r ratios, non-increasing
  std::vector<double> mean;                 // d
  Matrix components;                        // r x d, orthonormal rows

  std::vector<double> project(std::span<const double> x) const;
  // mean + sum_k rows(i,k) * components(k)
  std::vector<double> reconstruct(std::size_t i) const;
};

// PCA through the sample covariance eigendecomposition. Each component's
// largest-magnitude entry is made positive (first such entry on ties).
// Requires n >= 2 and 1 <= r <= min(n - 1, d); throws DegenerateInput when
// the data has zero variance.
ReducedMatrix pca_reduce(const Matrix& x, std::size_t r);

}  // namespace ragval::topics
