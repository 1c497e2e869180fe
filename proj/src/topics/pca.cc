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

#include "ragval/topics/pca.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "ragval/simd/kernels.h"

namespace ragval::topics {

std::vector<double> ReducedMatrix::project(std::span<const double> x) const {
  if (x.size() != mean.size()) throw InvalidArgument("project: dimension mismatch");
  std::vector<double> centered(x.begin(), x.end());
  for (std::size_t j = 0; j < centered.size(); ++j) centered[j] -= mean[j];
  std::vector<double> out(components.rows());
  for (std::size_t k = 0; k < components.rows(); ++k) {
    out[k] = simd::dot(components.row(k), centered);
  }
  return out;
}

std::vector<double> ReducedMatrix::reconstruct(std::size_t i) const {
  std::vector<double> out = mean;
  for (std::size_t k = 0; k < components.rows(); ++k) {
    simd::axpy(rows(i, k), components.row(k), out);
  }
  return out;
}

ReducedMatrix pca_reduce(const Matrix& x, std::size_t r) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 2) throw InvalidArgument("pca_reduce: need at least 2 rows");
  if (r < 1 || r > std::min(n - 1, d)) {
    throw InvalidArgument("pca_reduce: r=" + std::to_string(r) + " outside [1, " +
                          std::to_string(std::min(n - 1, d)) + "]");
  }
  ReducedMatrix out;
  out.mean.assign(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) simd::axpy(1.0, x.row(i), out.mean);
  for (double& m : out.mean) m /= static_cast<double>(n);

  // Centered columns, so covariance entries are contiguous dot products.
  Matrix cols(d, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) cols(j, i) = x(i, j) - out.mean[j];
  }
  Eigen::MatrixXd cov(d, d);
  const double denom = static_cast<double>(n - 1);
  double trace = 0.0;
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      const double c = simd::dot(cols.row(a), cols.row(b)) / denom;
      cov(a, b) = c;
      cov(b, a) = c;
    }
    trace += cov(a, a);
  }
  if (!(trace > 0.0) || !std::isfinite(trace)) {
    throw DegenerateInput("pca_reduce: data has zero variance (all rows identical)");
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw DegenerateInput("pca_reduce: eigensolver failed");
  const auto& values = solver.eigenvalues();    // ascending
  const auto& vectors = solver.eigenvectors();  // columns

  out.components = Matrix(r, d);
  out.explained_variance.resize(r);
  for (std::size_t k = 0; k < r; ++k) {
    const Eigen::Index col = static_cast<Eigen::Index>(d - 1 - k);
    std::size_t peak = 0;
    for (std::size_t j = 1; j < d; ++j) {
      if (std::abs(vectors(static_cast<Eigen::Index>(j), col)) >
          std::abs(vectors(static_cast<Eigen::Index>(peak), col))) {
        peak = j;
      }
    }
    const double sign = vectors(static_cast<Eigen::Index>(peak), col) < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < d; ++j) {
      out.components(k, j) = sign * vectors(static_cast<Eigen::Index>(j), col);
    }
    out.explained_variance[k] = std::clamp(values(col) / trace, 0.0, 1.0);
  }

  out.rows = Matrix(n, r);
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) centered[j] = cols(j, i);
    for (std::size_t k = 0; k < r; ++k) {
      out.rows(i, k) = simd::dot(out.components.row(k), centered);
    }
  }
  return out;
}

}  // namespace ragval::topics
