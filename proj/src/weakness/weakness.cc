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

#include "ragval/weakness/weakness.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "ragval/common/error.h"
#include "ragval/common/io.h"
#include "ragval/common/stats.h"

namespace ragval::weakness {

using nlohmann::json;

namespace {

constexpr std::array<Dimension, 3> kDimensions = {Dimension::kTopic, Dimension::kQueryType,
                                                  Dimension::kPerturbation};

std::vector<std::pair<std::string, double>> values_for(
    const std::vector<const EvalRecord*>& records, const std::string& metric) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto* r : records) {
    const auto it = r->scores.find(metric);
    if (it != r->scores.end()) out.emplace_back(r->record_id, it->second);
  }
  return out;
}

void require_metric(const std::vector<EvalRecord>& records, const std::string& metric) {
  for (const auto& r : records) {
    if (r.scores.count(metric)) return;
  }
  throw InvalidArgument("metric " + metric + " is absent from every record");
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

json rule_to_json(const FlagRule& r) {
  json j = {{"threshold", r.threshold}, {"higher_is_better", r.higher_is_better}};
  j["calibrated"] = r.calibrator.has_value();
  if (r.calibrator) j["calibrator"] = r.calibrator->to_json();
  return j;
}

FlagRule rule_from_json(const json& j) {
  FlagRule r;
  r.threshold = j.at("threshold").get<double>();
  r.higher_is_better = j.at("higher_is_better").get<bool>();
  if (j.contains("calibrator")) {
    r.calibrator = calibration::Stage1Calibrator::from_json(j.at("calibrator"));
  }
  return r;
}

}  // namespace

EvalRecord EvalRecord::from_json(const json& j) {
  EvalRecord r;
  r.record_id = j.at("record_id").get<std::string>();
  r.query_id = j.value("query_id", "");
  r.stratum_id = j.value("stratum_id", "");
  r.query_type = j.value("query_type", "");
  r.perturbation = j.value("perturbation", "clean");
  r.run_id = j.value("run_id", "");
  r.answer = j.value("answer", "");
  r.retrieved_context = j.value("retrieved_context", std::vector<std::string>{});
  if (j.contains("metrics")) {
    for (const auto& [name, v] : j.at("metrics").items()) {
      r.scores[name] = v.is_number() ? v.get<double>() : v.at("value").get<double>();
    }
  }
  if (j.contains("failed")) {
    for (const auto& [name, v] : j.at("failed").items()) r.failed[name] = v.get<std::string>();
  }
  return r;
}

std::vector<EvalRecord> load_records_jsonl(std::string_view text) {
  std::vector<EvalRecord> out;
  for (const auto& row : io::parse_jsonl(text, "records.jsonl")) {
    out.push_back(EvalRecord::from_json(row));
  }
  return out;
}

std::string_view dimension_name(Dimension d) {
  switch (d) {
    case Dimension::kTopic:
      return "topic";
    case Dimension::kQueryType:
      return "query_type";
    case Dimension::kPerturbation:
      return "perturbation";
  }
  return "?";
}

Dimension parse_dimension(std::string_view name) {
  for (auto d : kDimensions) {
    if (dimension_name(d) == name) return d;
  }
  throw InvalidArgument("unknown dimension \"" + std::string(name) + "\"");
}

std::string dimension_value(const EvalRecord& r, Dimension d) {
  switch (d) {
    case Dimension::kTopic:
      return r.stratum_id;
    case Dimension::kQueryType:
      return r.query_type;
    case Dimension::kPerturbation:
      return r.perturbation;
  }
  return {};
}

bool FlagRule::is_low(double value) const {
  const double v = calibrator ? calibrator->predict(value) : value;
  return higher_is_better ? v < threshold : v > threshold;
}

FlagRule default_flag_rule(const std::string& metric,
                           const std::optional<calibration::Stage1Calibrator>& calibrator) {
  FlagRule r;
  r.threshold = 0.5;
  r.higher_is_better = metric != "completeness_w";
  if (r.higher_is_better) r.calibrator = calibrator;
  return r;
}

json GroupStats::to_json() const {
  return {{"key", key},     {"count", count}, {"mean", mean},
          {"min", min},     {"max", max},     {"quantiles", quantiles},
          {"low_records", low_records}};
}

GroupStats GroupStats::from_json(const json& j) {
  GroupStats g;
  g.key = j.at("key").get<std::vector<std::string>>();
  g.count = j.at("count").get<std::size_t>();
  g.mean = j.at("mean").get<double>();
  g.min = j.at("min").get<double>();
  g.max = j.at("max").get<double>();
  g.quantiles = j.at("quantiles").get<std::array<double, 5>>();
  g.low_records = j.at("low_records").get<std::vector<std::string>>();
  return g;
}

GroupStats group_stats(std::vector<std::string> key,
                       const std::vector<std::pair<std::string, double>>& values,
                       const FlagRule& rule) {
  if (values.empty()) throw InvalidArgument("group_stats: empty group");
  GroupStats g;
  g.key = std::move(key);
  g.count = values.size();
  std::vector<double> sorted;
  sorted.reserve(values.size());
  for (const auto& [id, v] : values) {
    sorted.push_back(v);
    if (rule.is_low(v)) g.low_records.push_back(id);
  }
  std::sort(g.low_records.begin(), g.low_records.end());
  g.mean = stats::mean(sorted);
  std::sort(sorted.begin(), sorted.end());
  g.min = sorted.front();
  g.max = sorted.back();
  for (std::size_t i = 0; i < kQuantileLevels.size(); ++i) {
    g.quantiles[i] = stats::quantile_sorted(sorted, kQuantileLevels[i]);
  }
  return g;
}

std::vector<GroupStats> marginal_analysis(const std::vector<EvalRecord>& records, Dimension dim,
                                          const std::string& metric, const FlagRule& rule) {
  require_metric(records, metric);
  std::map<std::string, std::vector<const EvalRecord*>> groups;
  for (const auto& r : records) {
    const std::string v = dimension_value(r, dim);
    if (!v.empty() && r.scores.count(metric)) groups[v].push_back(&r);
  }
  std::vector<GroupStats> out;
  for (const auto& [value, members] : groups) {
    out.push_back(group_stats({value}, values_for(members, metric), rule));
  }
  return out;
}

const GroupStats* HeatmapGrid::cell(const std::string& row, const std::string& col) const {
  const auto it = cells.find({row, col});
  return it == cells.end() ? nullptr : &it->second;
}

json HeatmapGrid::to_json() const {
  json cell_list = json::array();
  for (const auto& [k, g] : cells) cell_list.push_back(g.to_json());
  return {{"dim1", dimension_name(dim1)},
          {"dim2", dimension_name(dim2)},
          {"metric", metric},
          {"rows", rows},
          {"cols", cols},
          {"cells", std::move(cell_list)}};
}

HeatmapGrid HeatmapGrid::from_json(const json& j) {
  HeatmapGrid h;
  h.dim1 = parse_dimension(j.at("dim1").get<std::string>());
  h.dim2 = parse_dimension(j.at("dim2").get<std::string>());
  h.metric = j.at("metric").get<std::string>();
  h.rows = j.at("rows").get<std::vector<std::string>>();
  h.cols = j.at("cols").get<std::vector<std::string>>();
  for (const auto& c : j.at("cells")) {
    GroupStats g = GroupStats::from_json(c);
    if (g.key.size() != 2) throw InvalidArgument("heatmap cell key must have two values");
    h.cells[{g.key[0], g.key[1]}] = std::move(g);
  }
  return h;
}

HeatmapGrid bivariate_analysis(const std::vector<EvalRecord>& records, Dimension dim1,
                               Dimension dim2, const std::string& metric, const FlagRule& rule) {
  if (dim1 == dim2) throw InvalidArgument("bivariate analysis needs two distinct dimensions");
  require_metric(records, metric);
  HeatmapGrid h;
  h.dim1 = dim1;
  h.dim2 = dim2;
  h.metric = metric;
  std::map<std::pair<std::string, std::string>, std::vector<const EvalRecord*>> groups;
  std::set<std::string> rows, cols;
  for (const auto& r : records) {
    const std::string a = dimension_value(r, dim1);
    const std::string b = dimension_value(r, dim2);
    if (a.empty() || b.empty() || !r.scores.count(metric)) continue;
    groups[{a, b}].push_back(&r);
    rows.insert(a);
    cols.insert(b);
  }
  h.rows.assign(rows.begin(), rows.end());
  h.cols.assign(cols.begin(), cols.end());
  for (const auto& [key, members] : groups) {
    h.cells[key] = group_stats({key.first, key.second}, values_for(members, metric), rule);
  }
  return h;
}

json WeaknessReport::to_json() const {
  json list = json::array();
  for (const auto& m : metrics) {
    json marg = json::object();
    for (const auto& [dim, groups] : m.marginals) {
      json g = json::array();
      for (const auto& s : groups) g.push_back(s.to_json());
      marg[dim] = std::move(g);
    }
    json entry = {{"metric", m.metric},
                  {"flag_rule", rule_to_json(m.rule)},
                  {"marginal", std::move(marg)},
                  {"bivariate", m.heatmap.to_json()}};
    if (m.metric == "completeness_sim") entry["label"] = "recall (context to answer coverage)";
    if (m.metric == "groundedness_sim") entry["label"] = "precision (answer to context support)";
    list.push_back(std::move(entry));
  }
  return {{"metrics", std::move(list)}};
}

WeaknessReport WeaknessReport::from_json(const json& j) {
  WeaknessReport r;
  for (const auto& e : j.at("metrics")) {
    MetricAnalysis m;
    m.metric = e.at("metric").get<std::string>();
    m.rule = rule_from_json(e.at("flag_rule"));
    for (const auto& [dim, groups] : e.at("marginal").items()) {
      auto& out = m.marginals[dim];
      for (const auto& g : groups) out.push_back(GroupStats::from_json(g));
    }
    m.heatmap = HeatmapGrid::from_json(e.at("bivariate"));
    r.metrics.push_back(std::move(m));
  }
  return r;
}

bool operator==(const WeaknessReport& a, const WeaknessReport& b) {
  if (a.metrics.size() != b.metrics.size()) return false;
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    const auto& x = a.metrics[i];
    const auto& y = b.metrics[i];
    if (x.metric != y.metric || x.marginals != y.marginals || !(x.heatmap == y.heatmap) ||
        x.rule.threshold != y.rule.threshold ||
        x.rule.higher_is_better != y.rule.higher_is_better ||
        x.rule.calibrator.has_value() != y.rule.calibrator.has_value()) {
      return false;
    }
    if (x.rule.calibrator && x.rule.calibrator->to_json() != y.rule.calibrator->to_json()) {
      return false;
    }
  }
  return true;
}

WeaknessReport analyze(const std::vector<EvalRecord>& records,
                       const std::vector<std::string>& metrics,
                       const std::map<std::string, calibration::Stage1Calibrator>& calibrators,
                       Dimension dim1, Dimension dim2) {
  WeaknessReport report;
  for (const auto& metric : metrics) {
    const bool present = std::any_of(records.begin(), records.end(),
                                     [&](const EvalRecord& r) { return r.scores.count(metric); });
    if (!present) continue;
    MetricAnalysis m;
    m.metric = metric;
    const auto cal = calibrators.find(metric);
    m.rule = default_flag_rule(metric, cal == calibrators.end()
                                           ? std::nullopt
                                           : std::optional(cal->second));
    for (auto d : kDimensions) {
      auto groups = marginal_analysis(records, d, metric, m.rule);
      if (!groups.empty()) m.marginals[std::string(dimension_name(d))] = std::move(groups);
    }
    m.heatmap = bivariate_analysis(records, dim1, dim2, metric, m.rule);
    report.metrics.push_back(std::move(m));
  }
  return report;
}

std::string heatmap_csv(const HeatmapGrid& grid) {
  std::string out = std::string(dimension_name(grid.dim1)) + "\\" +
                    std::string(dimension_name(grid.dim2));
  for (const auto& c : grid.cols) out += "," + csv_field(c);
  out += "\n";
  for (const auto& r : grid.rows) {
    out += csv_field(r);
    for (const auto& c : grid.cols) {
      out += ",";
      if (const GroupStats* g = grid.cell(r, c)) out += io::format_double(g->mean);
    }
    out += "\n";
  }
  return out;
}

std::string violin_csv(const MetricAnalysis& analysis) {
  std::string out = "dimension,group,count,mean,min,p5,p25,p50,p75,p95,max\n";
  for (const auto& [dim, groups] : analysis.marginals) {
    for (const auto& g : groups) {
      out += csv_field(dim) + "," + csv_field(g.key.front()) + "," + std::to_string(g.count) +
             "," + io::format_double(g.mean) + "," + io::format_double(g.min);
      for (double q : g.quantiles) out += "," + io::format_double(q);
      out += "," + io::format_double(g.max) + "\n";
    }
  }
  return out;
}

std::vector<std::filesystem::path> export_report(const WeaknessReport& report,
                                                 const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> written;
  const auto json_path = dir / "report.json";
  io::write_file(json_path, report.to_json().dump(2) + "\n");
  written.push_back(json_path);
  for (const auto& m : report.metrics) {
    const auto heat = dir / ("heatmap_" + m.metric + ".csv");
    io::write_file(heat, heatmap_csv(m.heatmap));
    written.push_back(heat);
    const auto violin = dir / ("violin_" + m.metric + ".csv");
    io::write_file(violin, violin_csv(m));
    written.push_back(violin);
  }
  return written;
}

}  // namespace ragval::weakness
