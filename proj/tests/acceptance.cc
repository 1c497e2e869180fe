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


// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.h"
#include "ragval/calibration/calibration.h"
#include "ragval/common/error.h"
#include "ragval/common/io.h"
#include "ragval/common/matrix.h"
#include "ragval/common/random.h"
#include "ragval/corpus/corpus.h"
#include "ragval/metrics/functional.h"
#include "ragval/pipeline/config.h"
#include "ragval/pipeline/pipeline.h"
#include "ragval/providers/embedding.h"
#include "ragval/providers/nli.h"
#include "ragval/robustness/robustness.h"
#include "ragval/robustness/runner.h"
#include "ragval/testgen/testgen.h"
#include "ragval/topics/cluster.h"
#include "ragval/topics/pca.h"
#include "ragval/weakness/weakness.h"
#include "test_support.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ragval;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failure messages of a criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(12);
    s << what << ": got " << got << " want " << want;
    expect(std::abs(got - want) <= tol, s.str());
  }
  Outcome done(std::string summary) const {
    if (failures_ == 0) return {true, std::move(summary)};
    return {false, std::to_string(failures_) + " failure(s): " + messages_};
  }

 private:
  std::size_t failures_ = 0;
  std::string messages_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// 1. Split-conformal coverage on exchangeable synthetic data.
Outcome conformal_coverage() {
  const auto t0 = std::chrono::steady_clock::now();
  const double alpha = 0.1, w = 2.5, b = -0.4;
  const std::size_t n_cal = 500, n_test = 2000, seeds = 50;
  double total = 0.0;
  for (std::size_t s = 0; s < seeds; ++s) {
    Rng rng(1000 + s);
    const auto draw = [&](std::size_t n, std::vector<double>& p, std::vector<int>& y) {
      for (std::size_t i = 0; i < n; ++i) {
        const double x = 4.0 * rng.uniform() - 2.0;
        p.push_back(sigmoid(w * x + b));
        y.push_back(rng.bernoulli(p.back()) ? 1 : 0);
      }
    };
    std::vector<double> p_cal, p_test;
    std::vector<int> y_cal, y_test;
    draw(n_cal, p_cal, y_cal);
    draw(n_test, p_test, y_test);
    std::vector<double> scores;
    for (std::size_t i = 0; i < n_cal; ++i) {
      scores.push_back(y_cal[i] ? 1.0 - p_cal[i] : p_cal[i]);
    }
    const auto conformal = calibration::conformal_from_scores(scores, alpha);
    total += calibration::coverage_eval(p_test, y_test, conformal).coverage;
  }
  const double mean = total / seeds;
  const double secs = seconds_since(t0);
  Check c;
  c.expect(mean >= 0.88 && mean <= 0.93, "mean coverage " + std::to_string(mean));
  c.expect(secs < 10.0, "took " + std::to_string(secs) + " s");
  return c.done("mean coverage " + std::to_string(mean) + " over 50 seeds in " +
                std::to_string(secs) + " s");
}

// 2. Prediction-set cases: {1} iff f >= 1-q and f > q; {0} iff f <= q and
// f < 1-q; {0,1} iff q >= max(f, 1-f); empty iff q < min(f, 1-f).
Outcome prediction_set_cases() {
  using calibration::PredictionSet;
  Check c;
  Rng rng(77);
  for (int t = 0; t < 10000; ++t) {
    const double f = rng.uniform(), q = rng.uniform();
    const bool one = f >= 1.0 - q && f > q;
    const bool zero = f <= q && f < 1.0 - q;
    const bool both = q >= std::max(f, 1.0 - f);
    const bool none = q < std::min(f, 1.0 - f);
    const int fired = one + zero + both + none;
    c.expect(fired == 1, "cases overlap at f=" + std::to_string(f) + " q=" + std::to_string(q));
    const PredictionSet want = one    ? PredictionSet::kOne
                               : zero ? PredictionSet::kZero
                               : both ? PredictionSet::kBoth
                                      : PredictionSet::kEmpty;
    c.expect(calibration::prediction_set(f, q) == want,
             "f=" + std::to_string(f) + " q=" + std::to_string(q));
  }
  c.expect(calibration::prediction_set(0.95, 0.3) == PredictionSet::kOne, "0.95/0.3");
  c.expect(calibration::prediction_set(0.5, 0.6) == PredictionSet::kBoth, "0.5/0.6");
  c.expect(calibration::prediction_set(0.5, 0.2) == PredictionSet::kEmpty, "0.5/0.2");
  return c.done("10000 random pairs and 3 worked examples");
}

// 3. PAVA against exhaustive monotone least squares.
Outcome isotonic_oracle() {
  Check c;
  Rng rng(5);
  std::size_t fixtures = 0;
  for (int t = 0; t < 3000; ++t) {
    const std::size_t n = 1 + rng.index(8);
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = t % 3 == 0 ? static_cast<double>(rng.index(2)) : rng.normal();
      w[i] = t % 2 ? 1.0 : 0.2 + 2.0 * rng.uniform();
    }
    const auto fit = calibration::pava(y, w);
    const auto oracle = ragval::testing::exhaustive_isotonic(y, w);
    for (std::size_t i = 0; i < n; ++i) c.near(fit[i], oracle[i], 1e-9, "pava fixture " + std::to_string(t));
    ++fixtures;
  }
  // Through fit_isotonic with tied scores: tied x pooled, then PAVA on the
  // pooled means weighted by multiplicity.
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng.index(7);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.index(4));
      y[i] = static_cast<double>(rng.index(2));
    }
    std::map<double, std::pair<double, double>> pooled;  // x -> (sum y, count)
    for (std::size_t i = 0; i < n; ++i) {
      pooled[x[i]].first += y[i];
      pooled[x[i]].second += 1.0;
    }
    std::vector<double> means, weights;
    for (const auto& [xv, sw] : pooled) {
      means.push_back(sw.first / sw.second);
      weights.push_back(sw.second);
    }
    const auto oracle = ragval::testing::exhaustive_isotonic(means, weights);
    const auto cal = calibration::fit_isotonic(x, y);
    c.expect(cal.levels.size() == oracle.size(), "tied fixture size");
    for (std::size_t i = 0; i < std::min(oracle.size(), cal.levels.size()); ++i) {
      c.near(cal.levels[i], oracle[i], 1e-9, "tied fixture " + std::to_string(t));
    }
    ++fixtures;
  }
  return c.done(std::to_string(fixtures) + " fixtures with <= 8 points");
}

// 4. Platt against grid-search likelihood maximization.
Outcome platt_oracle() {
  Check c;
  const std::vector<std::pair<std::vector<double>, std::vector<int>>> fixtures = {
      {{0.1, 0.2, 0.35, 0.4, 0.5, 0.55, 0.7, 0.8, 0.9, 0.95}, {0, 0, 1, 0, 0, 1, 1, 0, 1, 1}},
      {{-1.0, -0.5, 0.0, 0.3, 1.2, 2.0}, {0, 1, 0, 1, 1, 1}},
      {{0.2, 0.4, 0.6, 0.8, 0.3, 0.7, 0.5}, {0, 1, 0, 1, 1, 0, 1}}};
  std::ostringstream detail;
  for (std::size_t f = 0; f < fixtures.size(); ++f) {
    const auto& [x, y] = fixtures[f];
    const auto fit = calibration::fit_platt(x, y);
    const auto [w, b] = ragval::testing::grid_search_logistic(x, y);
    c.near(fit.w, w, 1e-4, "fixture " + std::to_string(f) + " w");
    c.near(fit.b, b, 1e-4, "fixture " + std::to_string(f) + " b");
    detail << "|dw|,|db| = " << std::abs(fit.w - w) << "," << std::abs(fit.b - b) << "; ";
  }
  const auto sym = calibration::fit_platt({-2, -1, -0.5, 0.5, 1, 2}, {0, 1, 0, 1, 0, 1});
  c.expect(std::abs(sym.b) < 1e-6, "symmetric |b| = " + std::to_string(std::abs(sym.b)));
  detail << "symmetric |b| = " << std::abs(sym.b);
  return c.done(detail.str());
}

// 5. Functional metric formulas on hand-computed fixtures.
Outcome metric_formulas() {
  using namespace metrics;
  using ragval::testing::vectors;
  Check c;
  // Query (1,0); context (1,0) (0,1) (0.6,0.8); answer (0.6,0.8) (0,1) (-1,0).
  // Cosines context x answer: c0 0.6 0 -1, c1 0.8 1 0, c2 1 0.8 -0.6.
  const auto q = vectors(Role::kQuery, {{1, 0}});
  const auto ctx = vectors(Role::kContext, {{1, 0}, {0, 1}, {0.6, 0.8}});
  const auto ans = vectors(Role::kAnswer, {{0.6, 0.8}, {0, 1}, {-1, 0}});

  const auto cr = context_relevancy(q, ctx, Aggregation::kMean);
  c.near(cr.value, 1.0, 1e-12, "context relevancy");
  c.expect(cr.per_sentence[0].match == 0, "context relevancy argmax");

  const auto g = groundedness_sim(ans, ctx);
  const std::vector<double> g_profile = {1.0, 1.0, 0.0};
  const std::vector<std::size_t> g_match = {2, 1, 1};  // tie 0 vs 0 on the last: lowest index wins
  for (std::size_t i = 0; i < 3; ++i) {
    c.near(g.per_sentence[i].value, g_profile[i], 1e-12, "groundedness S_max");
    c.expect(g.per_sentence[i].match == g_match[i], "groundedness argmax");
  }
  c.near(g.value, 2.0 / 3.0, 1e-12, "groundedness mean");
  c.expect(g.flagged == std::vector<std::size_t>{2}, "groundedness flags");

  c.near(completeness_sim(ctx, ans, Aggregation::kMean).value, 2.6 / 3.0, 1e-12,
         "completeness mean");
  c.near(aggregate(g.per_sentence, Aggregation::kMinimax), 0.0, 1e-12, "groundedness profile minimax");
  c.expect(g.least == 2, "least grounded sentence");
  c.near(answer_relevancy(ans, q, Aggregation::kMinimax).value, -1.0, 1e-12,
         "answer relevancy minimax");
  bool rejected = false;
  try {
    completeness_sim(ctx, ans, Aggregation::kMinimax);
  } catch (const InvalidArgument&) {
    rejected = true;
  }
  c.expect(rejected, "completeness accepts minimax");
  c.near(answer_relevancy(ans, q, Aggregation::kMean).value, -0.4 / 3.0, 1e-12,
         "answer relevancy");
  const Profile p = {{0, 0.2, 0}, {1, 0.8, 0}};
  c.near(aggregate(p, Aggregation::kWeighted, std::vector<double>{0.25, 0.75}), 0.65, 1e-12,
         "weighted");

  Rng rng(9);
  for (int t = 0; t < 1000; ++t) {
    Profile r(1 + rng.index(20));
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = {i, 2 * rng.uniform() - 1, 0};
    c.expect(aggregate(r, Aggregation::kMinimax) <= aggregate(r, Aggregation::kMean) + 1e-15,
             "minimax above mean");
  }

  c.expect(logistic(0.0) == 0.5, "sigma(0)");
  for (int t = 0; t < 1000; ++t) {
    const double d = 60 * rng.uniform() - 30;
    c.near(logistic(d) + logistic(-d), 1.0, 1e-12, "sigma symmetry");
  }

  // Wasserstein: uniform average of 1 - cos over all pairs.
  c.near(completeness_wasserstein(ctx, ans), (9.0 - 2.6) / 9.0, 1e-9, "wasserstein 1");
  c.near(completeness_wasserstein(vectors(Role::kContext, {{1, 0}, {0, 1}}),
                                  vectors(Role::kAnswer, {{1, 0}})),
         0.5, 1e-9, "wasserstein 2");
  // Cosines 1 0 -1 and 1/sqrt2 1/sqrt2 -1/sqrt2 sum to 1/sqrt2.
  c.near(completeness_wasserstein(vectors(Role::kContext, {{1, 0}, {1, 1}}),
                                  vectors(Role::kAnswer, {{1, 0}, {0, 1}, {-1, 0}})),
         (6.0 - 1.0 / std::sqrt(2.0)) / 6.0, 1e-9, "wasserstein 3");
  return c.done("profiles, aggregations, 1000 minimax profiles, sigma, 3 Wasserstein fixtures");
}

double sse_of(const Matrix& y, const std::vector<std::size_t>& labels) {
  double total = 0;
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> mean(y.cols(), 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < y.rows(); ++i) {
      if (labels[i] != k) continue;
      ++n;
      for (std::size_t d = 0; d < y.cols(); ++d) mean[d] += y(i, d);
    }
    if (n == 0) continue;
    for (std::size_t i = 0; i < y.rows(); ++i) {
      if (labels[i] != k) continue;
      for (std::size_t d = 0; d < y.cols(); ++d) {
        const double e = y(i, d) - mean[d] / n;
        total += e * e;
      }
    }
  }
  return total;
}

// Cyclic Jacobi rotations on a symmetric matrix; returns eigenpairs sorted by
// descending eigenvalue, eigenvectors as rows.
std::vector<std::pair<double, std::vector<double>>> jacobi_eigen(std::vector<std::vector<double>> a) {
  const std::size_t d = a.size();
  std::vector<std::vector<double>> v(d, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < d; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < d; ++p)
      for (std::size_t q = p + 1; q < d; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double cs = 1 / std::sqrt(t * t + 1), sn = t * cs;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = cs * akp - sn * akq;
          a[k][q] = sn * akp + cs * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = cs * apk - sn * aqk;
          a[q][k] = sn * apk + cs * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = cs * vkp - sn * vkq;
          v[k][q] = sn * vkp + cs * vkq;
        }
      }
    }
  }
  std::vector<std::pair<double, std::vector<double>>> out;
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col(d);
    for (std::size_t k = 0; k < d; ++k) col[k] = v[k][j];
    out.push_back({a[j][j], col});
  }
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
  return out;
}

// 6. k-means, DBSCAN and PCA against oracles.
Outcome clustering_oracles() {
  Check c;
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    Matrix y(6, 2);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 2; ++j) y(i, j) = rng.normal() + (i % 2 ? 3.0 * rng.uniform() : 0);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 1; mask + 1 < 64; ++mask) {
      std::vector<std::size_t> labels(6);
      for (std::size_t i = 0; i < 6; ++i) labels[i] = (mask >> i) & 1;
      best = std::min(best, sse_of(y, labels));
    }
    c.near(topics::kmeans(y, 2, 500 + t).sse, best, 1e-9, "k-means fixture " + std::to_string(t));
  }

  // eps 1, min_pts 3 (neighbourhoods include the point): p1 is the only core
  // of the first group, so p0, p2, p3 are its border points; the unit square
  // at (10,0) is all core; (5,5) is noise.
  const Matrix pts = Matrix::from_rows(
      {{0, 0}, {1, 0}, {2, 0}, {1, 1}, {10, 0}, {10, 1}, {11, 0}, {11, 1}, {5, 5}});
  const auto db = topics::dbscan(pts, 1.0, 3);
  c.expect(db.labels == std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1, topics::kNoise}, "dbscan labels");
  c.expect(db.core == std::vector<bool>{false, true, false, false, true, true, true, true, false},
           "dbscan cores");

  for (std::size_t d : {3u, 4u, 6u}) {
    Matrix x(50, d);
    for (std::size_t i = 0; i < 50; ++i)
      for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal() * (1.0 + 1.3 * j) + 0.2 * j;
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < 50; ++i)
      for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j) / 50;
    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < 50; ++i)
      for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = 0; b < d; ++b) cov[a][b] += (x(i, a) - mean[a]) * (x(i, b) - mean[b]) / 49;
    const auto eig = jacobi_eigen(cov);
    const auto red = topics::pca_reduce(x, d - 1);
    for (std::size_t k = 0; k + 1 < d; ++k) {
      double dot = 0;
      for (std::size_t j = 0; j < d; ++j) dot += red.components(k, j) * eig[k].second[j];
      c.near(std::abs(dot), 1.0, 1e-6, "pca component " + std::to_string(k) + " d=" + std::to_string(d));
    }
  }
  return c.done("100 six-point k-means fixtures, 9-point DBSCAN, PCA at d = 3, 4, 6");
}

// 7. Largest-remainder allocation.
Outcome allocation() {
  Check c;
  const auto alloc = [](const std::vector<std::size_t>& sizes, std::size_t budget) {
    const std::vector<double> shares(sizes.begin(), sizes.end());
    return testgen::allocate_budget(sizes, shares, budget);
  };
  c.expect(alloc({50, 30, 20}, 10) == std::vector<std::size_t>{5, 3, 2}, "[50,30,20]/10");
  Rng rng(23);
  for (int t = 0; t < 1000; ++t) {
    std::vector<std::size_t> sizes(1 + rng.index(10));
    for (auto& s : sizes) s = rng.index(4) == 0 ? 0 : 1 + rng.index(500);
    if (std::all_of(sizes.begin(), sizes.end(), [](auto s) { return s == 0; })) sizes[0] = 1;
    const std::size_t nonempty = std::count_if(sizes.begin(), sizes.end(), [](auto s) { return s > 0; });
    const std::size_t budget = nonempty + rng.index(100);
    const auto a = alloc(sizes, budget);
    c.expect(std::accumulate(a.begin(), a.end(), std::size_t{0}) == budget, "sum != budget");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      c.expect(sizes[i] == 0 ? a[i] == 0 : a[i] >= 1, "stratum " + std::to_string(i) + " floor");
    }
  }
  return c.done("1000 random size vectors and [50,30,20]/10 -> [5,3,2]");
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), dir).generic_string();
    if (rel == "manifest.json") continue;  // timestamps; stage hashes compared below
    files[rel] = io::read_file(e.path());
  }
  return files;
}

// 8. Two full runs on the toy corpus.
Outcome determinism() {
  Check c;
  const fs::path config = fs::path(RAGVAL_SOURCE_DIR) / "data" / "toy_config.json";
  const fs::path base = fs::temp_directory_path() / ("ragval_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<fs::path> dirs = {base / "a", base / "b"};
  for (const auto& dir : dirs) {
    pipeline::Overrides o;
    o.output_dir = dir;
    std::ostringstream log;
    const int code = pipeline::run_all(pipeline::load_run_config(config, o), log);
    c.expect(code == pipeline::kExitOk, "exit " + std::to_string(code) + ": " + log.str());
  }
  const double secs = seconds_since(t0);
  const auto a = tree(dirs[0]), b = tree(dirs[1]);
  c.expect(!a.empty() && a == b, "artifact trees differ");
  std::size_t chunks = 0, strata = 0;
  if (a.count("corpus.jsonl")) {
    chunks = std::count(a.at("corpus.jsonl").begin(), a.at("corpus.jsonl").end(), '\n');
  }
  if (a.count("topics.json")) strata = json::parse(a.at("topics.json")).at("strata").size();
  c.expect(chunks >= 60, "only " + std::to_string(chunks) + " chunks");
  c.expect(strata >= 3, "only " + std::to_string(strata) + " topics");
  const auto ma = json::parse(io::read_file(dirs[0] / "manifest.json"));
  const auto mb = json::parse(io::read_file(dirs[1] / "manifest.json"));
  c.expect(ma.at("artifacts").size() == pipeline::kStages.size(), "manifest stages");
  for (std::size_t i = 0; i < std::min(ma["artifacts"].size(), mb["artifacts"].size()); ++i) {
    c.expect(ma["artifacts"][i]["files"] == mb["artifacts"][i]["files"] &&
                 ma["artifacts"][i]["inputs_hash"] == mb["artifacts"][i]["inputs_hash"],
             "manifest entry " + std::to_string(i));
  }
  c.expect(secs < 60.0, "took " + std::to_string(secs) + " s");
  fs::remove_all(base);
  return c.done(std::to_string(a.size()) + " identical files, " + std::to_string(chunks) +
                " chunks, " + std::to_string(strata) + " topics, both runs in " +
                std::to_string(secs) + " s");
}

std::vector<std::string> letter_runs(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      cur.push_back(ch);
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// 9. Zero-rate perturbations leave every metric unchanged; rate-1 typos edit
// every eligible (3+ letter) word.
Outcome robustness_identity() {
  Check c;
  corpus::ChunkingConfig chunking;
  chunking.max_sentences = 3;
  const auto corpus =
      corpus::ingest({fs::path(RAGVAL_SOURCE_DIR) / "data" / "toy_corpus"}, chunking);
  auto emb = std::make_shared<providers::MockEmbedder>("m", 64, 11);
  providers::MockNli nli(emb);
  robustness::MockRagRunner runner(corpus, emb, 2, 2);
  std::vector<testgen::TestQuery> queries;
  const std::vector<std::string> texts = {
      "What is the annual fee on the Platinum Rewards card?",
      "How long is a fixed-rate mortgage rate locked?",
      "What should I do if I suspect fraud on my account?",
      "Does the savings account pay monthly interest?",
      "Is it true that the documents list a late payment fee?"};
  for (std::size_t i = 0; i < texts.size(); ++i) {
    testgen::TestQuery q;
    q.query_id = "q" + std::to_string(i);
    q.text = texts[i];
    q.stratum_id = "s" + std::to_string(i % 2);
    queries.push_back(q);
  }
  robustness::SuiteConfig cfg;
  cfg.kinds = {robustness::PerturbationKind::kTypo, robustness::PerturbationKind::kColloquial};
  cfg.typo_rate = 0.0;
  cfg.colloquial_rate = 0.0;
  cfg.seed = 3;
  const auto report = robustness::run_robustness_suite(queries, runner, cfg, *emb, nli);
  c.expect(report.failures.empty(), "runner failures");
  c.expect(report.records.size() == 2 * queries.size(), "record count");
  std::size_t deltas = 0;
  for (const auto& r : report.records) {
    c.expect(!r.delta.empty(), "no deltas for " + r.query_id);
    for (const auto& [m, d] : r.delta) {
      c.expect(d == 0.0, r.query_id + " " + m + " delta " + std::to_string(d));
      ++deltas;
    }
  }

  std::size_t typo_fixtures = 0;
  for (const auto& text : texts) {
    std::size_t eligible = 0;
    for (const auto& w : letter_runs(text)) eligible += w.size() >= 3;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::size_t edited = 0;
      const auto out = robustness::perturb_typos(text, 1.0, seed, &edited);
      c.expect(edited == eligible, "typo count on \"" + text + "\"");
      const auto before = letter_runs(text), after = letter_runs(out);
      std::size_t changed = 0;
      for (std::size_t i = 0; i < std::min(before.size(), after.size()); ++i) changed += before[i] != after[i];
      // A swap of two equal letters leaves the word unchanged, so changed <= edited.
      c.expect(before.size() == after.size() && changed <= eligible, "typo shape on \"" + text + "\"");
      ++typo_fixtures;
    }
  }
  return c.done(std::to_string(deltas) + " zero deltas over " + std::to_string(report.records.size()) +
                " perturbed runs; typo count exact on " + std::to_string(typo_fixtures) + " fixtures");
}

// 10. Bivariate cells recombine into marginals; flag sets nest as the
// threshold rises.
Outcome weakness_consistency() {
  using namespace weakness;
  Check c;
  Rng rng(19);
  const std::vector<std::string> topics = {"t0", "t1", "t2", "t3", "t4"};
  const std::vector<std::string> types = {"simple_factual", "multi_hop", "inference", "yes_no"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<EvalRecord> records;
    const std::size_t n = 20 + rng.index(200);
    for (std::size_t i = 0; i < n; ++i) {
      EvalRecord r;
      r.record_id = "r" + std::to_string(i);
      r.stratum_id = topics[rng.index(topics.size())];
      r.query_type = types[rng.index(types.size())];
      r.scores["m"] = 2 * rng.uniform() - 1;
      records.push_back(r);
    }
    const FlagRule rule;
    const auto grid = bivariate_analysis(records, Dimension::kTopic, Dimension::kQueryType, "m", rule);
    for (const auto& [dim, other] : {std::pair{Dimension::kTopic, false}, std::pair{Dimension::kQueryType, true}}) {
      for (const auto& g : marginal_analysis(records, dim, "m", rule)) {
        double sum = 0;
        std::size_t count = 0;
        std::set<std::string> low;
        for (const auto& [key, cell] : grid.cells) {
          if ((other ? key.second : key.first) != g.key[0]) continue;
          sum += cell.mean * cell.count;
          count += cell.count;
          low.insert(cell.low_records.begin(), cell.low_records.end());
        }
        c.expect(count == g.count, "count for " + g.key[0]);
        c.near(count ? sum / count : 0.0, g.mean, 1e-9, "mean for " + g.key[0]);
        c.expect(low == std::set<std::string>(g.low_records.begin(), g.low_records.end()),
                 "low records for " + g.key[0]);
      }
    }

    std::vector<double> thresholds(100);
    for (auto& t : thresholds) t = 2.4 * rng.uniform() - 1.2;
    std::sort(thresholds.begin(), thresholds.end());
    std::set<std::string> prev;
    for (double t : thresholds) {
      FlagRule r;
      r.threshold = t;
      std::set<std::string> flagged;
      for (const auto& g : marginal_analysis(records, Dimension::kTopic, "m", r)) {
        flagged.insert(g.low_records.begin(), g.low_records.end());
      }
      c.expect(std::includes(flagged.begin(), flagged.end(), prev.begin(), prev.end()),
               "flag set shrank at threshold " + std::to_string(t));
      prev = std::move(flagged);
    }
  }
  return c.done("50 random record sets, 100 thresholds each");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"conformal coverage", conformal_coverage},
      {"prediction-set cases", prediction_set_cases},
      {"isotonic oracle", isotonic_oracle},
      {"platt oracle", platt_oracle},
      {"metric formulas", metric_formulas},
      {"clustering oracles", clustering_oracles},
      {"stratified allocation", allocation},
      {"end-to-end determinism", determinism},
      {"robustness identity", robustness_identity},
      {"weakness consistency", weakness_consistency}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
