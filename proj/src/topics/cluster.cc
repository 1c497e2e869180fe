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

#include "ragval/topics/cluster.h"

#include <cmath>
#include <algorithm>
#include <deque>
#include <limits>
#include <string>

#include "ragval/common/hash.h"
#include "ragval/common/random.h"
#include "ragval/simd/kernels.h"

namespace ragval::topics {

namespace {

std::size_t nearest(const Matrix& centers, std::span<const double> p, double* dist2) {
  std::size_t best = 0;
  double best_d = simd::squared_distance(centers.row(0), p);
  for (std::size_t c = 1; c < centers.rows(); ++c) {
    const double d = simd::squared_distance(centers.row(c), p);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist2) *dist2 = best_d;
  return best;
}

double total_sse(const Matrix& y, const Matrix& centers, const std::vector<std::size_t>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    s += simd::squared_distance(centers.row(labels[i]), y.row(i));
  }
  return s;
}


// Hartigan single-point transfers: move a point to another cluster whenever
// that lowers the SSE once both centroids are updated. Leaves a Lloyd
// fixpoint that no single move improves.
void refine_transfers(const Matrix& y, KMeansResult& res) {
  const std::size_t n = y.rows();
  const std::size_t k = res.centroids.rows();
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t l : res.labels) ++counts[l];
  const auto recenter = [&](std::size_t c) {
    auto row = res.centroids.row(c);
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (res.labels[i] == c) simd::axpy(1.0, y.row(i), row);
    }
    for (double& v : row) v /= static_cast<double>(counts[c]);
  };
  bool moved = true;
  for (std::size_t pass = 0; moved && pass < kMaxLloydIterations; ++pass) {
    moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t from = res.labels[i];
      if (counts[from] < 2) continue;
      const double nf = static_cast<double>(counts[from]);
      const double removal =
          nf / (nf - 1.0) * simd::squared_distance(y.row(i), res.centroids.row(from));
      std::size_t to = from;
      double best = removal;
      for (std::size_t c = 0; c < k; ++c) {
        if (c == from) continue;
        const double nc = static_cast<double>(counts[c]);
        const double add = nc / (nc + 1.0) * simd::squared_distance(y.row(i), res.centroids.row(c));
        if (add < best - 1e-12 * (1.0 + removal)) {
          best = add;
          to = c;
        }
      }
      if (to == from) continue;
      res.labels[i] = to;
      --counts[from];
      ++counts[to];
      recenter(from);
      recenter(to);
      moved = true;
    }
  }
  res.sse = total_sse(y, res.centroids, res.labels);
}

}  // namespace

Matrix kmeans_plus_plus(const Matrix& y, std::size_t k, std::uint64_t seed) {
  const std::size_t n = y.rows();
  if (k < 1 || k > n) {
    throw InvalidArgument("kmeans: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(n) + "]");
  }
  Rng rng(seed);
  Matrix centers(k, y.cols());
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.index(n);
  std::copy(y.row(first).begin(), y.row(first).end(), centers.row(0).begin());
  chosen[first] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = simd::squared_distance(y.row(i), centers.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && target < acc) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        // Rounding left target at the end of the cumulative sum.
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Fewer distinct points than k: take the lowest unchosen index.
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) {
          pick = i;
          break;
        }
      }
    }
    chosen[pick] = true;
    std::copy(y.row(pick).begin(), y.row(pick).end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], simd::squared_distance(y.row(i), centers.row(c)));
    }
  }
  return centers;
}

KMeansResult kmeans_from(const Matrix& y, Matrix centers, std::size_t max_iterations) {
  const std::size_t n = y.rows();
  const std::size_t k = centers.rows();
  if (k < 1 || k > n) throw InvalidArgument("kmeans: need 1 <= k <= n");
  if (centers.cols() != y.cols()) throw InvalidArgument("kmeans: center dimension mismatch");
  KMeansResult res;
  res.labels.assign(n, 0);
  std::vector<std::size_t> prev(n, std::numeric_limits<std::size_t>::max());
  std::vector<double> d2(n);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) res.labels[i] = nearest(centers, y.row(i), &d2[i]);
    // Re-seed empty clusters at the point farthest from its centroid.
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t l : res.labels) ++counts[l];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[res.labels[i]] > 1 && (far == n || d2[i] > d2[far])) far = i;
      }
      if (far == n) continue;
      --counts[res.labels[far]];
      res.labels[far] = c;
      counts[c] = 1;
      d2[far] = 0.0;
      std::copy(y.row(far).begin(), y.row(far).end(), centers.row(c).begin());
    }
    const bool same = res.labels == prev;
    // Update step: centroid = mean of members.
    Matrix next(k, y.cols());
    for (std::size_t i = 0; i < n; ++i) simd::axpy(1.0, y.row(i), next.row(res.labels[i]));
    for (std::size_t c = 0; c < k; ++c) {
      for (double& v : next.row(c)) v /= static_cast<double>(counts[c]);
    }
    centers = std::move(next);
    res.iterations = it + 1;
    res.sse_history.push_back(total_sse(y, centers, res.labels));
    if (same) {
      res.converged = true;
      break;
    }
    prev = res.labels;
  }
  res.centroids = std::move(centers);
  res.sse = total_sse(y, res.centroids, res.labels);
  return res;
}

KMeansResult kmeans(const Matrix& y, std::size_t k, std::uint64_t seed, std::size_t restarts) {
  if (restarts < 1) throw InvalidArgument("kmeans: restarts must be >= 1");
  KMeansResult best;
  bool have = false;
  for (std::size_t r = 0; r < restarts; ++r) {
    const std::uint64_t run_seed = mix64(seed ^ mix64(r + 1));
    KMeansResult res = kmeans_from(y, kmeans_plus_plus(y, k, run_seed));
    refine_transfers(y, res);
    if (!have || res.sse < best.sse) {
      best = std::move(res);
      have = true;
    }
  }
  return best;
}

DbscanResult dbscan(const Matrix& y, double eps, std::size_t min_pts) {
  if (!(eps > 0.0)) throw InvalidArgument("dbscan: eps must be > 0");
  if (min_pts < 1) throw InvalidArgument("dbscan: min_pts must be >= 1");
  const std::size_t n = y.rows();
  const double eps2 = eps * eps;
  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (simd::squared_distance(y.row(i), y.row(j)) <= eps2) neighbors[i].push_back(j);
    }
  }
  DbscanResult res;
  res.labels.assign(n, kNoise);
  res.core.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) res.core[i] = neighbors[i].size() >= min_pts;
  int cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!res.core[i] || res.labels[i] != kNoise) continue;
    std::deque<std::size_t> frontier{i};
    res.labels[i] = cluster;
    while (!frontier.empty()) {
      const std::size_t p = frontier.front();
      frontier.pop_front();
      for (std::size_t q : neighbors[p]) {
        if (res.labels[q] != kNoise) continue;
        res.labels[q] = cluster;
        if (res.core[q]) frontier.push_back(q);
      }
    }
    ++cluster;
  }
  res.clusters = static_cast<std::size_t>(cluster);
  return res;
}

double silhouette(const Matrix& y, const std::vector<int>& labels) {
  const std::size_t n = y.rows();
  if (labels.size() != n) throw InvalidArgument("silhouette: label count mismatch");
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  if (max_label < 0) return 0.0;
  const std::size_t k = static_cast<std::size_t>(max_label) + 1;
  std::vector<std::size_t> sizes(k, 0);
  for (int l : labels) {
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  }
  double total = 0.0;
  std::size_t counted = 0;
  std::vector<double> sums(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0) continue;
    ++counted;
    const auto own = static_cast<std::size_t>(labels[i]);
    if (sizes[own] <= 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || labels[j] < 0) continue;
      sums[static_cast<std::size_t>(labels[j])] +=
          std::sqrt(simd::squared_distance(y.row(i), y.row(j)));
    }
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      if (c == own || sizes[c] == 0) continue;
      b = std::min(b, sums[c] / static_cast<double>(sizes[c]));
    }
    if (!std::isfinite(b)) continue;
    const double m = std::max(a, b);
    if (m > 0.0) total += (b - a) / m;
  }
  return counted ? total / static_cast<double>(counted) : 0.0;
}

}  // namespace ragval::topics
