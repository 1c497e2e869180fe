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

// Breakdowns of evaluation results by topic, query type and perturbation:
// per-group statistics for one dimension (marginal) or a pair (bivariate),
// exported as plot-ready CSV and JSON.

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragval/calibration/calibration.h"

namespace ragval::weakness {

struct EvalRecord {
  std::string record_id;
  std::string query_id;
  std::string stratum_id;
  std::string query_type;
  std::string perturbation = "clean";
  std::string run_id;
  std::string answer;
  std::vector<std::string> retrieved_context;
  std::map<std::string, double> scores;       // metric -> value
  std::map<std::string, std::string> failed;  // metric -> reason

  // Reads {record_id, query_id, stratum_id, query_type, perturbation, run_id,
  // answer, retrieved_context, metrics: {name: {value, ...} | number},
  // failed: {name: reason}}.
  static EvalRecord from_json(const nlohmann::json& j);
};

std::vector<EvalRecord> load_records_jsonl(std::string_view text);

enum class Dimension { kTopic, kQueryType, kPerturbation };

std::string_view dimension_name(Dimension d);
Dimension parse_dimension(std::string_view name);
// Empty when the record does not carry the dimension.
std::string dimension_value(const EvalRecord& r, Dimension d);

// A record is low when its (optionally calibrated) score falls below the
// threshold; for distance metrics, when it rises above it.
struct FlagRule {
  double threshold = 0.5;
  bool higher_is_better = true;
  std::optional<calibration::Stage1Calibrator> calibrator;

  bool is_low(double value) const;
};

// 0.5 on the calibrated probability when a calibrator is given, else 0.5 on
// the raw score; distances (completeness_w) flip direction.
FlagRule default_flag_rule(const std::string& metric,
                           const std::optional<calibration::Stage1Calibrator>& calibrator = {});

struct GroupStats {
  std::vector<std::string> key;  // one value (marginal) or two (bivariate)
  std::size_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::array<double, 5> quantiles{};  // 5, 25, 50, 75, 95 %
  std::vector<std::string> low_records;

  nlohmann::json to_json() const;
  static GroupStats from_json(const nlohmann::json& j);
  bool operator==(const GroupStats&) const = default;
};

inline constexpr std::array<double, 5> kQuantileLevels = {0.05, 0.25, 0.5, 0.75, 0.95};

// Stats over (record_id, value) pairs; quantiles by linear interpolation.
GroupStats group_stats(std::vector<std::string> key,
                       const std::vector<std::pair<std::string, double>>& values,
                       const FlagRule& rule);

// One group per distinct value, ordered by value. Throws InvalidArgument when
// no record has the metric.
std::vector<GroupStats> marginal_analysis(const std::vector<EvalRecord>& records, Dimension dim,
                                          const std::string& metric, const FlagRule& rule);

struct HeatmapGrid {
  Dimension dim1 = Dimension::kTopic;
  Dimension dim2 = Dimension::kQueryType;
  std::string metric;
  std::vector<std::string> rows;  // dim1 values
  std::vector<std::string> cols;  // dim2 values
  std::map<std::pair<std::string, std::string>, GroupStats> cells;  // absent cells missing

  const GroupStats* cell(const std::string& row, const std::string& col) const;
  nlohmann::json to_json() const;
  static HeatmapGrid from_json(const nlohmann::json& j);
  bool operator==(const HeatmapGrid&) const = default;
};

HeatmapGrid bivariate_analysis(const std::vector<EvalRecord>& records, Dimension dim1,
                               Dimension dim2, const std::string& metric, const FlagRule& rule);

struct MetricAnalysis {
  std::string metric;
  FlagRule rule;
  std::map<std::string, std::vector<GroupStats>> marginals;  // dimension name -> groups
  HeatmapGrid heatmap;
};

struct WeaknessReport {
  std::vector<MetricAnalysis> metrics;

  nlohmann::json to_json() const;
  static WeaknessReport from_json(const nlohmann::json& j);
};

bool operator==(const WeaknessReport& a, const WeaknessReport& b);

// Marginals over every dimension present on the records plus a dim1 x dim2
// heatmap for each metric that any record carries.
WeaknessReport analyze(const std::vector<EvalRecord>& records,
                       const std::vector<std::string>& metrics,
                       const std::map<std::string, calibration::Stage1Calibrator>& calibrators,
                       Dimension dim1 = Dimension::kTopic,
                       Dimension dim2 = Dimension::kQueryType);

// rows = dim1 values, columns = dim2 values, cell = mean (blank if absent).
std::string heatmap_csv(const HeatmapGrid& grid);
// dimension,group,count,mean,min,p5,p25,p50,p75,p95,max
std::string violin_csv(const MetricAnalysis& analysis);

// Writes report.json, heatmap_<metric>.csv and violin_<metric>.csv under
// `dir`; returns the written paths in order.
std::vector<std::filesystem::path> export_report(const WeaknessReport& report,
                                                 const std::filesystem::path& dir);

}  // namespace ragval::weakness
