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
#include <limits>
#include <set>

#include "ragval/common/error.h"
#include "ragval/common/random.h"
#include "ragval/corpus/corpus.h"
#include "ragval/providers/embedding.h"
#include "ragval/topics/cluster.h"
#include "ragval/topics/pca.h"
#include "ragval/topics/strata.h"

namespace ragval::topics {
namespace {

double sse_of(const Matrix& y, const std::vector<std::size_t>& labels, std::size_t k) {
  double total = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> mean(y.cols(), 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < y.rows(); ++i) {
      if (labels[i] != c) continue;
      ++n;
      for (std::size_t d = 0; d < y.cols(); ++d) mean[d] += y(i, d);
    }
    if (n == 0) continue;
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      if (labels[i] != c) continue;
      for (std::size_t d = 0; d < y.cols(); ++d) total += (y(i, d) - mean[d]) * (y(i, d) - mean[d]);
    }
  }
  return total;
}

// Minimum SSE over every split of the points into two non-empty groups.
double brute_force_two_means(const Matrix& y) {
  const std::size_t n = y.rows();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = (mask >> i) & 1;
    best = std::min(best, sse_of(y, labels, 2));
  }
  return best;
}

Matrix random_points(Rng& rng, std::size_t n, std::size_t d) {
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.normal() + (i % 2 ? 3.0 * rng.uniform() : 0);
  }
  return m;
}

TEST(KMeans, MatchesBruteForceOnSixPoints) {
  Rng rng(31);
  for (int t = 0; t < 50; ++t) {
    const Matrix y = random_points(rng, 6, 2);
    const auto r = kmeans(y, 2, 1000 + t);
    EXPECT_NEAR(r.sse, brute_force_two_means(y), 1e-9) << "fixture " << t;
    EXPECT_NEAR(r.sse, sse_of(y, r.labels, 2), 1e-9);
  }
}

TEST(KMeans, SseHistoryNonIncreasingAndSeeded) {
  Rng rng(4);
  const Matrix y = random_points(rng, 60, 3);
  const auto a = kmeans(y, 4, 9);
  const auto b = kmeans(y, 4, 9);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.sse, b.sse);
  for (std::size_t i = 1; i < a.sse_history.size(); ++i) {
    EXPECT_LE(a.sse_history[i], a.sse_history[i - 1] + 1e-12);
  }
  EXPECT_TRUE(a.converged);
  EXPECT_THROW(kmeans(y, 0, 1), InvalidArgument);
  EXPECT_THROW(kmeans(y, 61, 1), InvalidArgument);
}

TEST(KMeans, PlusPlusPicksDistinctDataPoints) {
  Rng rng(8);
  const Matrix y = random_points(rng, 20, 2);
  const Matrix c = kmeans_plus_plus(y, 5, 3);
  ASSERT_EQ(c.rows(), 5u);
  std::set<std::pair<double, double>> picked;
  for (std::size_t k = 0; k < 5; ++k) {
    bool is_point = false;
    for (std::size_t i = 0; i < y.rows(); ++i) is_point |= (y(i, 0) == c(k, 0) && y(i, 1) == c(k, 1));
    EXPECT_TRUE(is_point);
    picked.insert({c(k, 0), c(k, 1)});
  }
  EXPECT_EQ(picked.size(), 5u);
}

// Hand trace, eps = 1 (inclusive), min_pts = 3, neighborhoods count the point:
//   p0 (0,0): {p0,p1}          border
//   p1 (1,0): {p0,p1,p2,p3}    core  -> cluster 0 grows from here
//   p2 (2,0): {p1,p2}          border
//   p3 (1,1): {p1,p3}          border
//   p4..p7, unit square at (10,0): each {self, 2 edge neighbours}  core -> cluster 1
//   p8 (5,5): {p8}             noise
TEST(Dbscan, HandTracedNinePoints) {
  const Matrix y = Matrix::from_rows({{0, 0}, {1, 0}, {2, 0}, {1, 1}, {10, 0}, {10, 1}, {11, 0},
                                      {11, 1}, {5, 5}});
  const auto r = dbscan(y, 1.0, 3);
  EXPECT_EQ(r.labels, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1, kNoise}));
  EXPECT_EQ(r.core, (std::vector<bool>{false, true, false, false, true, true, true, true, false}));
  EXPECT_EQ(r.clusters, 2u);
}

TEST(Dbscan, BorderPointJoinsFirstCluster) {
  // eps 2, min_pts 5: (0,0) and (4,0) are the only cores. b = (2,0) is at
  // distance 2 from both with 3 neighbours, so it is a border point that the
  // cluster grown first (from index 0) claims.
  const Matrix y = Matrix::from_rows(
      {{0, 0}, {0, 1}, {0, -1}, {-1, 0}, {2, 0}, {4, 0}, {4, 1}, {4, -1}, {5, 0}});
  const auto r = dbscan(y, 2.0, 5);
  EXPECT_FALSE(r.core[4]);
  EXPECT_EQ(r.labels[4], r.labels[0]);
  EXPECT_NE(r.labels[0], r.labels[5]);
}

TEST(Silhouette, HandComputed) {
  const Matrix y = Matrix::from_rows({{0}, {1}, {5}, {6}, {20}});
  const std::vector<int> labels = {0, 0, 1, 1, 2};
  const double s0 = 1 - 1 / 5.5, s1 = 1 - 1 / 4.5;
  EXPECT_NEAR(silhouette(y, labels), (2 * s0 + 2 * s1 + 0) / 5, 1e-12);
  EXPECT_NEAR(silhouette(y, {0, 0, 1, 1, kNoise}), (2 * s0 + 2 * s1) / 4, 1e-12);
}

// Independent oracle: power iteration with deflation on the sample covariance.
std::vector<std::vector<double>> power_eigvecs(const Matrix& x, std::size_t r,
                                               std::vector<double>& values) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mean(d, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j) / n;
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        c[a][b] += (x(i, a) - mean[a]) * (x(i, b) - mean[b]) / (n - 1);
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < r; ++k) {
    std::vector<double> v(d, 1.0);
    v[k % d] += 0.5;
    double lambda = 0;
    for (int it = 0; it < 20000; ++it) {
      std::vector<double> w(d, 0);
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) w[a] += c[a][b] * v[b];
      double norm = 0;
      for (double z : w) norm += z * z;
      norm = std::sqrt(norm);
      for (auto& z : w) z /= norm;
      lambda = norm;
      v = w;
    }
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) c[a][b] -= lambda * v[a] * v[b];
    values.push_back(lambda);
    out.push_back(v);
  }
  return out;
}

TEST(Pca, MatchesPowerIterationOracleUpToSign) {
  Rng rng(12);
  for (std::size_t d : {3u, 5u}) {
    Matrix x(40, d);
    for (std::size_t i = 0; i < 40; ++i)
      for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal() * (1.0 + 1.5 * j) + 0.3 * j;
    const std::size_t r = d - 1;
    const auto red = pca_reduce(x, r);
    std::vector<double> values;
    const auto oracle = power_eigvecs(x, r, values);
    double total_var = 0;
    {
      std::vector<double> all;
      power_eigvecs(x, d, all);
      for (double v : all) total_var += v;
    }
    for (std::size_t k = 0; k < r; ++k) {
      double dotp = 0;
      for (std::size_t j = 0; j < d; ++j) dotp += red.components(k, j) * oracle[k][j];
      EXPECT_NEAR(std::abs(dotp), 1.0, 1e-6) << "d=" << d << " component " << k;
      EXPECT_NEAR(red.explained_variance[k], values[k] / total_var, 1e-6);
    }
  }
}

TEST(Pca, SignConventionAndReconstruction) {
  Rng rng(13);
  Matrix x(10, 3);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 3; ++j) x(i, j) = rng.normal() * (j + 1);
  // Full rank reduction (r = min(n-1, d) = 3) reconstructs exactly.
  const auto red = pca_reduce(x, 3);
  for (std::size_t k = 0; k < 3; ++k) {
    std::size_t arg = 0;
    for (std::size_t j = 1; j < 3; ++j)
      if (std::abs(red.components(k, j)) > std::abs(red.components(k, arg))) arg = j;
    EXPECT_GT(red.components(k, arg), 0.0);
  }
  for (std::size_t i = 0; i < 10; ++i) {
    const auto back = red.reconstruct(i);
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(back[j], x(i, j), 1e-9);
  }
  EXPECT_THROW(pca_reduce(x, 4), InvalidArgument);
  EXPECT_THROW(pca_reduce(Matrix(5, 3, 1.0), 2), DegenerateInput);
}

corpus::Chunk make_chunk(const std::string& id, const std::string& text) {
  corpus::Chunk c;
  c.chunk_id = id;
  c.doc_id = "d";
  c.sentences.push_back({0, text, "", ""});
  return c;
}

TEST(BuildTopics, RecoversVocabularyGroups) {
  const std::vector<std::vector<std::string>> vocab = {
      {"mortgage", "escrow", "appraisal", "lender", "refinance", "closing"},
      {"card", "rewards", "statement", "limit", "cashback", "annual"},
      {"fraud", "phishing", "alert", "identity", "dispute", "lock"}};
  std::vector<corpus::Chunk> chunks;
  Rng rng(6);
  for (std::size_t i = 0; i < 30; ++i) {
    const auto& words = vocab[i % 3];
    std::string text;
    for (int w = 0; w < 6; ++w) text += words[rng.index(words.size())] + " ";
    chunks.push_back(make_chunk("c" + std::to_string(i), text + "."));
  }
  const corpus::Corpus corpus({}, chunks, {});
  providers::MockEmbedder emb("m", 32, 2);
  std::vector<std::vector<double>> rows;
  for (const auto& c : chunks) rows.push_back(emb.embed_one(c.text()).values);
  std::vector<std::string> ids;
  for (const auto& c : chunks) ids.push_back(c.chunk_id);
  TopicsConfig cfg;
  cfg.seed = 5;
  // Auto k may split a group (random word draws leave substructure) but must
  // never merge two.
  const auto auto_k = build_topics(corpus, Matrix::from_rows(rows), cfg);
  EXPECT_GE(auto_k.strata.size(), 3u);
  EXPECT_NO_THROW(check_partition(auto_k.strata, ids));
  for (const auto& s : auto_k.strata) {
    std::set<std::size_t> groups;
    for (const auto& id : s.chunk_ids) groups.insert(std::stoul(id.substr(1)) % 3);
    EXPECT_EQ(groups.size(), 1u) << s.stratum_id;
  }
  cfg.k = 3;
  const auto model = build_topics(corpus, Matrix::from_rows(rows), cfg);
  ASSERT_EQ(model.strata.size(), 3u);
  EXPECT_NO_THROW(check_partition(model.strata, ids));
  for (const auto& s : model.strata) {
    std::set<std::size_t> groups;
    for (const auto& id : s.chunk_ids) groups.insert(std::stoul(id.substr(1)) % 3);
    EXPECT_EQ(groups.size(), 1u) << s.stratum_id;
    EXPECT_EQ(s.chunk_ids.size(), 10u);
    EXPECT_EQ(s.keywords.size(), cfg.keywords);
  }
  const auto strata = strata_from_json(model.to_json());
  ASSERT_EQ(strata.size(), 3u);
  EXPECT_EQ(strata[1].chunk_ids, model.strata[1].chunk_ids);
}

TEST(Strata, NoiseGoesLastAndPartitionIsChecked) {
  const Matrix reduced = Matrix::from_rows({{0, 0}, {1, 1}, {2, 2}, {3, 3}});
  const auto s = build_strata({"a", "b", "c", "d"}, {1, kNoise, 0, 1}, reduced);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s[0].chunk_ids, (std::vector<std::string>{"a", "d"}));
  EXPECT_EQ(s[0].stratum_id, "s0");
  EXPECT_EQ(s[1].chunk_ids, (std::vector<std::string>{"c"}));
  EXPECT_TRUE(s[2].is_noise);
  EXPECT_EQ(s[2].stratum_id, kNoiseStratumId);
  EXPECT_THROW(check_partition(s, {"a", "b", "c"}), InvalidArgument);
}

}  // namespace
}  // namespace ragval::topics
