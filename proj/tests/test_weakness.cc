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

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "ragval/common/error.h"
#include "ragval/common/io.h"
#include "ragval/common/random.h"
#include "ragval/weakness/weakness.h"

namespace ragval::weakness {
namespace {

EvalRecord rec(std::string id, std::string topic, std::string type, double score,
               std::string pert = "clean") {
  EvalRecord r;
  r.record_id = std::move(id);
  r.stratum_id = std::move(topic);
  r.query_type = std::move(type);
  r.perturbation = std::move(pert);
  r.scores["m"] = score;
  return r;
}

// Linear interpolation between order statistics at h = (n - 1) p.
double quantile_oracle(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - lo) * (v[hi] - v[lo]);
}

std::vector<EvalRecord> random_records(Rng& rng, std::size_t n) {
  const std::vector<std::string> topics = {"t0", "t1", "t2", "t3"};
  const std::vector<std::string> types = {"fact_single", "summary", "reasoning"};
  std::vector<EvalRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(rec("r" + std::to_string(i), topics[rng.index(topics.size())],
                      types[rng.index(types.size())], rng.uniform()));
  }
  return out;
}

TEST(GroupStatsTest, MatchesDirectComputation) {
  const std::vector<std::pair<std::string, double>> v = {
      {"a", 0.9}, {"b", 0.1}, {"c", 0.4}, {"d", 0.7}, {"e", 0.2}};
  const auto g = group_stats({"k"}, v, FlagRule{});
  EXPECT_EQ(g.count, 5u);
  EXPECT_NEAR(g.mean, 2.3 / 5, 1e-12);
  EXPECT_DOUBLE_EQ(g.min, 0.1);
  EXPECT_DOUBLE_EQ(g.max, 0.9);
  std::vector<double> xs = {0.9, 0.1, 0.4, 0.7, 0.2};
  for (std::size_t i = 0; i < kQuantileLevels.size(); ++i) {
    EXPECT_NEAR(g.quantiles[i], quantile_oracle(xs, kQuantileLevels[i]), 1e-12);
  }
  EXPECT_EQ(g.low_records, (std::vector<std::string>{"b", "c", "e"}));
  EXPECT_THROW(group_stats({"k"}, {}, FlagRule{}), InvalidArgument);
}

TEST(FlagRuleTest, DistanceFlipsDirection) {
  const auto rule = default_flag_rule("completeness_w");
  EXPECT_FALSE(rule.higher_is_better);
  EXPECT_TRUE(rule.is_low(0.8));
  EXPECT_FALSE(rule.is_low(0.2));
  const auto sim = default_flag_rule("c_relevancy");
  EXPECT_TRUE(sim.is_low(0.2));
  EXPECT_FALSE(sim.is_low(0.8));
}

TEST(FlagRuleTest, UsesCalibratedProbability) {
  calibration::Stage1Calibrator cal;
  cal.method = calibration::Stage1Method::kPlatt;
  cal.metric = "c_relevancy";
  cal.platt.w = 10.0;
  cal.platt.b = -2.0;  // p = 0.5 at x = 0.2
  const auto rule = default_flag_rule("c_relevancy", cal);
  EXPECT_FALSE(rule.is_low(0.3));
  EXPECT_TRUE(rule.is_low(0.1));
}

TEST(FlagRuleTest, MonotoneInThreshold) {
  Rng rng(3);
  const auto records = random_records(rng, 120);
  std::size_t prev = 0;
  for (int t = 0; t <= 100; ++t) {
    FlagRule rule;
    rule.threshold = t / 100.0;
    std::size_t flagged = 0;
    for (const auto& g : marginal_analysis(records, Dimension::kTopic, "m", rule)) {
      flagged += g.low_records.size();
    }
    EXPECT_GE(flagged, prev);
    prev = flagged;
  }
  EXPECT_EQ(prev, records.size());
}

TEST(MarginalTest, GroupsOrderedByValue) {
  const std::vector<EvalRecord> records = {rec("a", "t1", "x", 0.2), rec("b", "t0", "x", 0.4),
                                           rec("c", "t1", "y", 0.6)};
  const auto groups = marginal_analysis(records, Dimension::kTopic, "m", FlagRule{});
  ASSERT_EQ(groups.size(), 2u);
  EXPECT_EQ(groups[0].key, std::vector<std::string>{"t0"});
  EXPECT_EQ(groups[1].key, std::vector<std::string>{"t1"});
  EXPECT_NEAR(groups[1].mean, 0.4, 1e-12);
  EXPECT_THROW(marginal_analysis(records, Dimension::kTopic, "missing", FlagRule{}),
               InvalidArgument);
}

TEST(MarginalTest, FailedMetricIsSkipped) {
  auto records = std::vector<EvalRecord>{rec("a", "t0", "x", 0.2), rec("b", "t0", "x", 0.8)};
  records[1].scores.clear();
  records[1].failed["m"] = "timeout";
  const auto groups = marginal_analysis(records, Dimension::kTopic, "m", FlagRule{});
  ASSERT_EQ(groups.size(), 1u);
  EXPECT_EQ(groups[0].count, 1u);
}

TEST(BivariateTest, CellsCombineToMarginals) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto records = random_records(rng, 10 + rng.index(90));
    const auto grid =
        bivariate_analysis(records, Dimension::kTopic, Dimension::kQueryType, "m", FlagRule{});
    const auto rows = marginal_analysis(records, Dimension::kTopic, "m", FlagRule{});
    ASSERT_EQ(rows.size(), grid.rows.size());
    for (const auto& g : rows) {
      double sum = 0.0;
      std::size_t count = 0;
      double lo = 1e300, hi = -1e300;
      for (const auto& c : grid.cols) {
        if (const auto* cell = grid.cell(g.key[0], c)) {
          sum += cell->mean * cell->count;
          count += cell->count;
          lo = std::min(lo, cell->min);
          hi = std::max(hi, cell->max);
        }
      }
      EXPECT_EQ(count, g.count);
      EXPECT_NEAR(sum / count, g.mean, 1e-9);
      EXPECT_DOUBLE_EQ(lo, g.min);
      EXPECT_DOUBLE_EQ(hi, g.max);
    }
  }
}

TEST(BivariateTest, AbsentCellsAndSameDimension) {
  const std::vector<EvalRecord> records = {rec("a", "t0", "x", 0.2), rec("b", "t1", "y", 0.4)};
  const auto grid =
      bivariate_analysis(records, Dimension::kTopic, Dimension::kQueryType, "m", FlagRule{});
  EXPECT_EQ(grid.cell("t0", "y"), nullptr);
  ASSERT_NE(grid.cell("t1", "y"), nullptr);
  EXPECT_EQ(heatmap_csv(grid), "topic\\query_type,x,y\nt0,0.2,\nt1,,0.4\n");
  EXPECT_THROW(
      bivariate_analysis(records, Dimension::kTopic, Dimension::kTopic, "m", FlagRule{}),
      InvalidArgument);
}

TEST(DimensionTest, NamesRoundTrip) {
  for (auto d : {Dimension::kTopic, Dimension::kQueryType, Dimension::kPerturbation}) {
    EXPECT_EQ(parse_dimension(dimension_name(d)), d);
  }
  EXPECT_THROW(parse_dimension("color"), InvalidArgument);
}

TEST(ReportTest, JsonRoundTripAndExport) {
  Rng rng(5);
  auto records = random_records(rng, 40);
  for (std::size_t i = 0; i < records.size(); i += 3) records[i].perturbation = "typo";
  for (auto& r : records) r.scores["completeness_w"] = 1.0 - r.scores["m"];
  calibration::Stage1Calibrator cal;
  cal.metric = "m";
  cal.platt.w = 4.0;
  cal.platt.b = -2.0;
  const auto report = analyze(records, {"m", "completeness_w"}, {{"m", cal}});
  ASSERT_EQ(report.metrics.size(), 2u);
  EXPECT_EQ(report.metrics[0].marginals.size(), 3u);
  EXPECT_FALSE(report.metrics[1].rule.higher_is_better);
  EXPECT_EQ(WeaknessReport::from_json(report.to_json()), report);

  const auto violin = violin_csv(report.metrics[0]);
  EXPECT_EQ(violin.substr(0, violin.find('\n')),
            "dimension,group,count,mean,min,p5,p25,p50,p75,p95,max");
  std::size_t groups = 0;
  for (const auto& [dim, gs] : report.metrics[0].marginals) groups += gs.size();
  EXPECT_EQ(static_cast<std::size_t>(std::count(violin.begin(), violin.end(), '\n')), groups + 1);

  const auto dir = std::filesystem::temp_directory_path() / "ragval_weakness_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto paths = export_report(report, dir);
  ASSERT_EQ(paths.size(), 5u);
  EXPECT_EQ(paths[0].filename(), "report.json");
  EXPECT_EQ(io::read_file(paths[1]), heatmap_csv(report.metrics[0].heatmap));
  std::filesystem::remove_all(dir);
}

TEST(RecordsTest, LoadsJsonl) {
  const std::string text =
      R"({"record_id":"r1","stratum_id":"t0","query_type":"summary",)"
      R"("metrics":{"m":{"value":0.25,"detail":1},"n":0.5},"failed":{"k":"timeout"}})"
      "\n"
      R"({"record_id":"r2","perturbation":"typo","metrics":{}})"
      "\n";
  const auto records = load_records_jsonl(text);
  ASSERT_EQ(records.size(), 2u);
  EXPECT_DOUBLE_EQ(records[0].scores.at("m"), 0.25);
  EXPECT_DOUBLE_EQ(records[0].scores.at("n"), 0.5);
  EXPECT_EQ(records[0].failed.at("k"), "timeout");
  EXPECT_EQ(records[0].perturbation, "clean");
  EXPECT_EQ(records[1].perturbation, "typo");
  EXPECT_EQ(dimension_value(records[1], Dimension::kTopic), "");
}

}  // namespace
}  // namespace ragval::weakness
