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

// Two-stage calibration of machine scores against human labels. Stage 1 maps
// a score to P(human agrees) with Platt scaling or isotonic regression;
// stage 2 wraps that probability in split-conformal prediction sets.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace ragval::calibration {

struct CalibrationSample {
  double x = 0.0;  // machine score
  int y = 0;       // human label, 0 or 1
  std::string metric;
  std::string record_id;
};

struct LogisticCalibrator {
  double w = 0.0;
  double b = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;
  bool separated = false;  // perfect separation; stopped at the parameter cap

  double predict(double x) const;
  nlohmann::json to_json() const;
  static LogisticCalibrator from_json(const nlohmann::json& j);
};

inline constexpr int kPlattMaxIterations = 100;
inline constexpr double kPlattGradientTolerance = 1e-8;
inline constexpr double kPlattParameterCap = 100.0;

// Maximum-likelihood logistic fit by damped Newton iteration. Throws
// InvalidArgument on fewer than two samples, one label class only, labels
// other than 0/1 or non-finite scores.
LogisticCalibrator fit_platt(const std::vector<double>& x, const std::vector<int>& y);
LogisticCalibrator fit_platt(const std::vector<CalibrationSample>& samples);

struct IsotonicCalibrator {
  std::vector<double> breakpoints;  // ascending, distinct
  std::vector<double> levels;       // non-decreasing, one per breakpoint

  // Level of the last breakpoint <= x; the first level below the range.
  double predict(double x) const;
  nlohmann::json to_json() const;
  static IsotonicCalibrator from_json(const nlohmann::json& j);
};

// Least-squares non-decreasing fit by pool-adjacent-violators. Samples with
// equal x are averaged first.
IsotonicCalibrator fit_isotonic(const std::vector<double>& x, const std::vector<double>& y);
IsotonicCalibrator fit_isotonic(const std::vector<CalibrationSample>& samples);

// PAVA on an already ordered sequence with positive weights.
std::vector<double> pava(const std::vector<double>& y, const std::vector<double>& weights = {});

enum class Stage1Method { kPlatt, kIsotonic };

std::string_view stage1_method_name(Stage1Method m);
Stage1Method parse_stage1_method(std::string_view name);

struct Stage1Calibrator {
  Stage1Method method = Stage1Method::kPlatt;
  std::string metric;
  LogisticCalibrator platt;
  IsotonicCalibrator isotonic;

  double predict(double x) const;
  nlohmann::json to_json() const;
  static Stage1Calibrator from_json(const nlohmann::json& j);
};

Stage1Calibrator fit_stage1(const std::vector<CalibrationSample>& samples, Stage1Method method);

// |y - p| written as 1 - P(Y = y | x).
double nonconformity(double p_positive, int y);

struct ConformalCalibrator {
  double alpha = 0.1;
  double qhat = 1.0;
  std::size_t n = 0;
  bool all_covering = false;  // rank ceil((n+1)(1-alpha)) > n; every set is {0,1}

  nlohmann::json to_json() const;
  static ConformalCalibrator from_json(const nlohmann::json& j);
};

// 1-based rank ceil((n+1)(1-alpha)) of the conformal quantile.
std::size_t conformal_rank(std::size_t n, double alpha);

ConformalCalibrator conformal_from_scores(std::vector<double> scores, double alpha);
ConformalCalibrator conformal_calibrate(const Stage1Calibrator& stage1,
                                        const std::vector<CalibrationSample>& holdout,
                                        double alpha);

enum class PredictionSet { kEmpty, kZero, kOne, kBoth };

std::string_view prediction_set_name(PredictionSet s);
bool contains(PredictionSet s, int y);

// {y : P(Y = y | x) >= 1 - qhat}.
PredictionSet prediction_set(double p_positive, double qhat);
PredictionSet prediction_set(double p_positive, const ConformalCalibrator& conformal);

struct CoverageReport {
  std::size_t n = 0;
  double coverage = 0.0;
  std::size_t singletons = 0;
  std::size_t both = 0;
  std::size_t empty = 0;  // reported as needing human review
  nlohmann::json to_json() const;
};

CoverageReport coverage_eval(const Stage1Calibrator& stage1, const ConformalCalibrator& conformal,
                             const std::vector<CalibrationSample>& test);
CoverageReport coverage_eval(const std::vector<double>& p_positive, const std::vector<int>& y,
                             const ConformalCalibrator& conformal);

struct ErrorAnalysis {
  double threshold = 0.5;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> type1;  // FP / (FP + TN); empty without negatives
  std::optional<double> type2;  // FN / (FN + TP); empty without positives
  nlohmann::json to_json() const;
};

ErrorAnalysis error_analysis(const Stage1Calibrator& stage1,
                             const std::vector<CalibrationSample>& samples, double threshold);
ErrorAnalysis error_analysis(const std::vector<double>& p_positive, const std::vector<int>& y,
                             double threshold);

struct HumanLabel {
  std::string record_id;
  std::string metric;
  double label = 0.0;
  std::string annotator_id;
};

// CSV with header record_id,metric,label,annotator_id.
std::vector<HumanLabel> parse_labels_csv(std::string_view text);

// Multi-level labels are binarized as label >= positive_min, then annotators
// are combined by majority (ties count as positive). Key: (record_id, metric).
std::map<std::pair<std::string, std::string>, int> binarize_labels(
    const std::vector<HumanLabel>& labels, double positive_min);

// Seeded disjoint split: the first part holds round(fraction * n) samples.
std::pair<std::vector<CalibrationSample>, std::vector<CalibrationSample>> split_samples(
    const std::vector<CalibrationSample>& samples, double fraction, std::uint64_t seed);

// "x,probability" rows on an even grid over [lo, hi].
std::string calibration_curve_csv(const Stage1Calibrator& stage1, double lo, double hi,
                                  std::size_t points = 101);

}  // namespace ragval::calibration
