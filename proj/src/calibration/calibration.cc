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

#include "ragval/calibration/calibration.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "ragval/common/error.h"
#include "ragval/common/io.h"
#include "ragval/common/random.h"
#include "ragval/common/text.h"

namespace ragval::calibration {

using nlohmann::json;

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double neg_log_likelihood(const std::vector<double>& x, const std::vector<int>& y, double w,
                          double b) {
  double nll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double z = w * x[i] + b;
    nll += y[i] == 1 ? softplus(-z) : softplus(z);
  }
  return nll;
}

void check_samples(const std::vector<double>& x, const std::vector<int>& y) {
  if (x.size() != y.size()) throw InvalidArgument("calibration: score/label length mismatch");
  for (double v : x) {
    if (!std::isfinite(v)) throw InvalidArgument("calibration: non-finite machine score");
  }
  for (int v : y) {
    if (v != 0 && v != 1) throw InvalidArgument("calibration: labels must be 0 or 1");
  }
}

void split_xy(const std::vector<CalibrationSample>& s, std::vector<double>& x,
              std::vector<int>& y) {
  x.reserve(s.size());
  y.reserve(s.size());
  for (const auto& c : s) {
    x.push_back(c.x);
    y.push_back(c.y);
  }
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back().push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back().push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back().push_back(c);
    }
  }
  return fields;
}

}  // namespace

double LogisticCalibrator::predict(double x) const { return sigmoid(w * x + b); }

json LogisticCalibrator::to_json() const {
  return {{"w", w},
          {"b", b},
          {"iterations", iterations},
          {"gradient_norm", gradient_norm},
          {"converged", converged},
          {"separated", separated}};
}

LogisticCalibrator LogisticCalibrator::from_json(const json& j) {
  LogisticCalibrator c;
  c.w = j.at("w").get<double>();
  c.b = j.at("b").get<double>();
  c.iterations = j.value("iterations", 0);
  c.gradient_norm = j.value("gradient_norm", 0.0);
  c.converged = j.value("converged", false);
  c.separated = j.value("separated", false);
  return c;
}

LogisticCalibrator fit_platt(const std::vector<double>& x, const std::vector<int>& y) {
  check_samples(x, y);
  if (x.size() < 2) throw InvalidArgument("fit_platt: need at least two samples");
  const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (positives == 0 || positives == y.size()) {
    throw InvalidArgument("fit_platt: labels contain a single class");
  }
  LogisticCalibrator c;
  const double prior = static_cast<double>(positives) / static_cast<double>(y.size());
  c.b = std::log(prior / (1.0 - prior));

  // Separable when every positive score lies strictly on one side of every
  // negative score.
  double pos_min = INFINITY, pos_max = -INFINITY, neg_min = INFINITY, neg_max = -INFINITY;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] == 1) {
      pos_min = std::min(pos_min, x[i]);
      pos_max = std::max(pos_max, x[i]);
    } else {
      neg_min = std::min(neg_min, x[i]);
      neg_max = std::max(neg_max, x[i]);
    }
  }
  c.separated = neg_max < pos_min || pos_max < neg_min;

  double nll = neg_log_likelihood(x, y, c.w, c.b);
  for (c.iterations = 0; c.iterations < kPlattMaxIterations; ++c.iterations) {
    double gw = 0.0, gb = 0.0, hww = 0.0, hwb = 0.0, hbb = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = sigmoid(c.w * x[i] + c.b);
      const double r = p - y[i];
      const double v = p * (1.0 - p);
      gw += r * x[i];
      gb += r;
      hww += v * x[i] * x[i];
      hwb += v * x[i];
      hbb += v;
    }
    c.gradient_norm = std::hypot(gw, gb);
    if (c.gradient_norm < kPlattGradientTolerance) {
      c.converged = true;
      break;
    }
    // Tiny ridge keeps the 2x2 solve defined when the curvature vanishes.
    const double ridge = 1e-12 * (hww + hbb) + 1e-300;
    hww += ridge;
    hbb += ridge;
    const double det = hww * hbb - hwb * hwb;
    double dw, db;
    if (det > 0.0 && std::isfinite(det)) {
      dw = (hbb * gw - hwb * gb) / det;
      db = (hww * gb - hwb * gw) / det;
    } else {
      dw = gw;
      db = gb;
    }
    double step = 1.0;
    double w_new = c.w, b_new = c.b, nll_new = nll;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      w_new = c.w - step * dw;
      b_new = c.b - step * db;
      nll_new = neg_log_likelihood(x, y, w_new, b_new);
      if (nll_new <= nll) break;
    }
    if (!(nll_new <= nll)) break;  // no descent direction left
    const double mag = std::max(std::abs(w_new), std::abs(b_new));
    if (mag > kPlattParameterCap) {
      const double shrink = kPlattParameterCap / mag;
      c.w = w_new * shrink;
      c.b = b_new * shrink;
      ++c.iterations;
      break;
    }
    c.w = w_new;
    c.b = b_new;
    nll = nll_new;
  }
  return c;
}

LogisticCalibrator fit_platt(const std::vector<CalibrationSample>& samples) {
  std::vector<double> x;
  std::vector<int> y;
  split_xy(samples, x, y);
  return fit_platt(x, y);
}

std::vector<double> pava(const std::vector<double>& y, const std::vector<double>& weights) {
  if (!weights.empty() && weights.size() != y.size()) {
    throw InvalidArgument("pava: weight length mismatch");
  }
  struct Block {
    double value;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (!(w > 0.0)) throw InvalidArgument("pava: weights must be positive");
    blocks.push_back({y[i], w, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value > blocks.back().value) {
      Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      const double total = prev.weight + top.weight;
      prev.value = (prev.value * prev.weight + top.value * top.weight) / total;
      prev.weight = total;
      prev.count += top.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.value);
  return out;
}

double IsotonicCalibrator::predict(double x) const {
  if (levels.empty()) throw InvalidArgument("isotonic calibrator is empty");
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
  if (it == breakpoints.begin()) return levels.front();
  return levels[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

json IsotonicCalibrator::to_json() const {
  return {{"breakpoints", breakpoints}, {"levels", levels}};
}

IsotonicCalibrator IsotonicCalibrator::from_json(const json& j) {
  IsotonicCalibrator c;
  c.breakpoints = j.at("breakpoints").get<std::vector<double>>();
  c.levels = j.at("levels").get<std::vector<double>>();
  if (c.breakpoints.size() != c.levels.size()) {
    throw InvalidArgument("isotonic calibrator: breakpoints/levels length mismatch");
  }
  return c;
}

IsotonicCalibrator fit_isotonic(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw InvalidArgument("fit_isotonic: length mismatch");
  if (x.empty()) throw InvalidArgument("fit_isotonic: no samples");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw InvalidArgument("fit_isotonic: non-finite input");
    }
  }
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  IsotonicCalibrator c;
  std::vector<double> means, weights;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < order.size() && x[order[j]] == x[order[i]]) sum += y[order[j++]];
    c.breakpoints.push_back(x[order[i]]);
    means.push_back(sum / static_cast<double>(j - i));
    weights.push_back(static_cast<double>(j - i));
    i = j;
  }
  c.levels = pava(means, weights);
  return c;
}

IsotonicCalibrator fit_isotonic(const std::vector<CalibrationSample>& samples) {
  std::vector<double> x, y;
  for (const auto& s : samples) {
    x.push_back(s.x);
    y.push_back(static_cast<double>(s.y));
  }
  return fit_isotonic(x, y);
}

std::string_view stage1_method_name(Stage1Method m) {
  return m == Stage1Method::kPlatt ? "platt" : "isotonic";
}

Stage1Method parse_stage1_method(std::string_view name) {
  if (name == "platt" || name == "logistic") return Stage1Method::kPlatt;
  if (name == "isotonic") return Stage1Method::kIsotonic;
  throw InvalidArgument("unknown calibration method \"" + std::string(name) + "\"");
}

double Stage1Calibrator::predict(double x) const {
  return method == Stage1Method::kPlatt ? platt.predict(x) : isotonic.predict(x);
}

json Stage1Calibrator::to_json() const {
  json j = {{"method", stage1_method_name(method)}, {"metric", metric}};
  if (method == Stage1Method::kPlatt) {
    j["platt"] = platt.to_json();
  } else {
    j["isotonic"] = isotonic.to_json();
  }
  return j;
}

Stage1Calibrator Stage1Calibrator::from_json(const json& j) {
  Stage1Calibrator c;
  c.method = parse_stage1_method(j.at("method").get<std::string>());
  c.metric = j.value("metric", "");
  if (c.method == Stage1Method::kPlatt) {
    c.platt = LogisticCalibrator::from_json(j.at("platt"));
  } else {
    c.isotonic = IsotonicCalibrator::from_json(j.at("isotonic"));
  }
  return c;
}

Stage1Calibrator fit_stage1(const std::vector<CalibrationSample>& samples, Stage1Method method) {
  Stage1Calibrator c;
  c.method = method;
  if (!samples.empty()) c.metric = samples.front().metric;
  if (method == Stage1Method::kPlatt) {
    c.platt = fit_platt(samples);
  } else {
    c.isotonic = fit_isotonic(samples);
  }
  return c;
}

double nonconformity(double p_positive, int y) {
  return 1.0 - (y == 1 ? p_positive : 1.0 - p_positive);
}

json ConformalCalibrator::to_json() const {
  return {{"alpha", alpha}, {"qhat", qhat}, {"n", n}, {"all_covering", all_covering}};
}

ConformalCalibrator ConformalCalibrator::from_json(const json& j) {
  ConformalCalibrator c;
  c.alpha = j.at("alpha").get<double>();
  c.qhat = j.at("qhat").get<double>();
  c.n = j.at("n").get<std::size_t>();
  c.all_covering = j.value("all_covering", false);
  return c;
}

std::size_t conformal_rank(std::size_t n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  const double v = static_cast<double>(n + 1) * (1.0 - alpha);
  // Guard against products like 9.000000000000002 rounding up a whole rank.
  return static_cast<std::size_t>(std::ceil(v - 1e-9 * std::max(1.0, v)));
}

ConformalCalibrator conformal_from_scores(std::vector<double> scores, double alpha) {
  if (scores.empty()) throw InvalidArgument("conformal calibration: empty holdout");
  for (double s : scores) {
    if (!std::isfinite(s)) throw InvalidArgument("conformal calibration: non-finite score");
  }
  ConformalCalibrator c;
  c.alpha = alpha;
  c.n = scores.size();
  const std::size_t rank = conformal_rank(c.n, alpha);
  if (rank > c.n) {
    c.all_covering = true;
    c.qhat = 1.0;
    return c;
  }
  std::sort(scores.begin(), scores.end());
  c.qhat = scores[std::max<std::size_t>(rank, 1) - 1];
  return c;
}

ConformalCalibrator conformal_calibrate(const Stage1Calibrator& stage1,
                                        const std::vector<CalibrationSample>& holdout,
                                        double alpha) {
  std::vector<double> scores;
  scores.reserve(holdout.size());
  for (const auto& s : holdout) {
    if (s.y != 0 && s.y != 1) throw InvalidArgument("conformal calibration: labels must be 0/1");
    scores.push_back(nonconformity(stage1.predict(s.x), s.y));
  }
  return conformal_from_scores(std::move(scores), alpha);
}

std::string_view prediction_set_name(PredictionSet s) {
  switch (s) {
    case PredictionSet::kEmpty:
      return "empty";
    case PredictionSet::kZero:
      return "{0}";
    case PredictionSet::kOne:
      return "{1}";
    case PredictionSet::kBoth:
      return "{0,1}";
  }
  return "?";
}

bool contains(PredictionSet s, int y) {
  switch (s) {
    case PredictionSet::kBoth:
      return true;
    case PredictionSet::kZero:
      return y == 0;
    case PredictionSet::kOne:
      return y == 1;
    case PredictionSet::kEmpty:
      return false;
  }
  return false;
}

PredictionSet prediction_set(double p_positive, double qhat) {
  const double floor = 1.0 - qhat;
  const bool zero = 1.0 - p_positive >= floor;
  const bool one = p_positive >= floor;
  if (zero && one) return PredictionSet::kBoth;
  if (zero) return PredictionSet::kZero;
  if (one) return PredictionSet::kOne;
  return PredictionSet::kEmpty;
}

PredictionSet prediction_set(double p_positive, const ConformalCalibrator& conformal) {
  if (conformal.all_covering) return PredictionSet::kBoth;
  return prediction_set(p_positive, conformal.qhat);
}

json CoverageReport::to_json() const {
  return {{"n", n},
          {"coverage", coverage},
          {"set_sizes", {{"singleton", singletons}, {"both", both}, {"empty", empty}}},
          {"needs_human_review", empty}};
}

CoverageReport coverage_eval(const std::vector<double>& p_positive, const std::vector<int>& y,
                             const ConformalCalibrator& conformal) {
  if (p_positive.size() != y.size()) throw InvalidArgument("coverage_eval: length mismatch");
  if (y.empty()) throw InvalidArgument("coverage_eval: empty test set");
  CoverageReport r;
  r.n = y.size();
  std::size_t covered = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const PredictionSet s = prediction_set(p_positive[i], conformal);
    if (contains(s, y[i])) ++covered;
    if (s == PredictionSet::kBoth) {
      ++r.both;
    } else if (s == PredictionSet::kEmpty) {
      ++r.empty;
    } else {
      ++r.singletons;
    }
  }
  r.coverage = static_cast<double>(covered) / static_cast<double>(r.n);
  return r;
}

CoverageReport coverage_eval(const Stage1Calibrator& stage1, const ConformalCalibrator& conformal,
                             const std::vector<CalibrationSample>& test) {
  std::vector<double> p;
  std::vector<int> y;
  for (const auto& s : test) {
    p.push_back(stage1.predict(s.x));
    y.push_back(s.y);
  }
  return coverage_eval(p, y, conformal);
}

json ErrorAnalysis::to_json() const {
  auto rate = [](const std::optional<double>& r) -> json {
    return r ? json(*r) : json("undefined");
  };
  return {{"threshold", threshold},
          {"confusion", {{"tp", tp}, {"fp", fp}, {"tn", tn}, {"fn", fn}}},
          {"type1_rate", rate(type1)},
          {"type2_rate", rate(type2)}};
}

ErrorAnalysis error_analysis(const std::vector<double>& p_positive, const std::vector<int>& y,
                             double threshold) {
  if (p_positive.size() != y.size()) throw InvalidArgument("error_analysis: length mismatch");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("error_analysis: threshold must lie in [0, 1]");
  }
  ErrorAnalysis e;
  e.threshold = threshold;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool predicted = p_positive[i] >= threshold;
    if (y[i] == 1) {
      predicted ? ++e.tp : ++e.fn;
    } else {
      predicted ? ++e.fp : ++e.tn;
    }
  }
  if (e.fp + e.tn > 0) e.type1 = static_cast<double>(e.fp) / static_cast<double>(e.fp + e.tn);
  if (e.fn + e.tp > 0) e.type2 = static_cast<double>(e.fn) / static_cast<double>(e.fn + e.tp);
  return e;
}

ErrorAnalysis error_analysis(const Stage1Calibrator& stage1,
                             const std::vector<CalibrationSample>& samples, double threshold) {
  std::vector<double> p;
  std::vector<int> y;
  for (const auto& s : samples) {
    p.push_back(stage1.predict(s.x));
    y.push_back(s.y);
  }
  return error_analysis(p, y, threshold);
}

std::vector<HumanLabel> parse_labels_csv(std::string_view t) {
  std::vector<HumanLabel> out;
  std::size_t pos = 0, line_no = 0;
  bool header = true;
  std::map<std::string, std::size_t> col;
  while (pos < t.size()) {
    std::size_t nl = t.find('\n', pos);
    if (nl == std::string_view::npos) nl = t.size();
    std::string_view line = t.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (text::trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (header) {
      for (std::size_t i = 0; i < fields.size(); ++i) col[std::string(text::trim(fields[i]))] = i;
      for (const char* need : {"record_id", "metric", "label"}) {
        if (!col.count(need)) {
          throw InvalidArgument(std::string("labels CSV: missing column ") + need);
        }
      }
      header = false;
      continue;
    }
    auto field = [&](const char* name) -> std::string {
      auto it = col.find(name);
      if (it == col.end() || it->second >= fields.size()) return {};
      return std::string(text::trim(fields[it->second]));
    };
    HumanLabel h;
    h.record_id = field("record_id");
    h.metric = field("metric");
    h.annotator_id = field("annotator_id");
    const std::string raw = field("label");
    char* end = nullptr;
    h.label = std::strtod(raw.c_str(), &end);
    if (raw.empty() || end == nullptr || *end != '\0' || !std::isfinite(h.label)) {
      throw InvalidArgument("labels CSV line " + std::to_string(line_no) + ": bad label \"" +
                            raw + "\"");
    }
    if (h.record_id.empty() || h.metric.empty()) {
      throw InvalidArgument("labels CSV line " + std::to_string(line_no) +
                            ": empty record_id or metric");
    }
    out.push_back(std::move(h));
  }
  return out;
}

std::map<std::pair<std::string, std::string>, int> binarize_labels(
    const std::vector<HumanLabel>& labels, double positive_min) {
  std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> votes;
  for (const auto& h : labels) {
    auto& v = votes[{h.record_id, h.metric}];
    if (h.label >= positive_min) ++v.first;
    ++v.second;
  }
  std::map<std::pair<std::string, std::string>, int> out;
  for (const auto& [key, v] : votes) out[key] = 2 * v.first >= v.second ? 1 : 0;
  return out;
}

std::pair<std::vector<CalibrationSample>, std::vector<CalibrationSample>> split_samples(
    const std::vector<CalibrationSample>& samples, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw InvalidArgument("split fraction must lie in [0, 1]");
  }
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  const auto first = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(samples.size())));
  std::pair<std::vector<CalibrationSample>, std::vector<CalibrationSample>> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < first ? out.first : out.second).push_back(samples[order[i]]);
  }
  return out;
}

std::string calibration_curve_csv(const Stage1Calibrator& stage1, double lo, double hi,
                                  std::size_t points) {
  if (points < 2 || !(hi > lo)) throw InvalidArgument("calibration curve: bad grid");
  std::string out = "x,probability\n";
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    out += io::format_double(x) + "," + io::format_double(stage1.predict(x)) + "\n";
  }
  return out;
}

}  // namespace ragval::calibration
