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
#include <cstdint>
#include <vector>

#include "ragval/common/matrix.h"

namespace ragval::topics {

struct KMeansResult {
  std::vector<std::size_t> labels;
  Matrix centroids;
  double sse = 0.0;
  std::size_t iterations = 0;
  bool converged = false;           // reached an assignment fixpoint
  std::vector<double> sse_history;  // after each Lloyd iteration
};

inline constexpr std::size_t kMaxLloydIterations = 300;

// k-means++ seeding: first center uniform, then each next center drawn with
// probability proportional to squared distance to the nearest chosen one.
Matrix kmeans_plus_plus(const Matrix& y, std::size_t k, std::uint64_t seed);

// Lloyd iterations from the given centers until the assignment stops changing
// or max_iterations. Nearest-centroid ties go to the lowest centroid index. A
// cluster left empty is re-seeded at the point farthest from its centroid.
KMeansResult kmeans_from(const Matrix& y, Matrix centers,
                         std::size_t max_iterations = kMaxLloydIterations);

// Best (lowest SSE, earliest on ties) of `restarts` k-means++ runs whose
// seeds are derived from `seed`. Requires 1 <= k <= n.
KMeansResult kmeans(const Matrix& y, std::size_t k, std::uint64_t seed,
                    std::size_t restarts = 10);

inline constexpr int kNoise = -1;

struct DbscanResult {
  std::vector<int> labels;  // cluster index, or kNoise
  std::vector<bool> core;
  std::size_t clusters = 0;
};

// Density clustering with inclusive eps-neighborhoods that count the point
// itself; a point is core when its neighborhood has >= min_pts points.
// Clusters are grown in index order; a border point joins the first cluster
// that reaches it.
DbscanResult dbscan(const Matrix& y, double eps, std::size_t min_pts);

// Mean silhouette coefficient; points in singleton clusters score 0.
// Labels < 0 are ignored.
double silhouette(const Matrix& y, const std::vector<int>& labels);

}  // namespace ragval::topics
