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

// Output risk checks: toxicity scoring, counterfactual bias probes and a
// rule-based PII scan.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragval/providers/classifier.h"
#include "ragval/providers/embedding.h"

namespace ragval::risk {

struct ToxicityResult {
  std::string text_id;
  double score = 0.0;
  double threshold = 0.0;
  bool passed = true;  // score <= threshold

  nlohmann::json to_json() const;
};

ToxicityResult toxicity_score(const std::string& text, providers::Classifier& classifier,
                              double threshold, std::string text_id = {});

enum class BiasDimension { kGender, kRace, kAge, kIncome };

std::string_view bias_dimension_name(BiasDimension d);
BiasDimension parse_bias_dimension(std::string_view name);

struct SwapPair {
  std::string original;
  std::string counterfactual;
  BiasDimension dimension = BiasDimension::kGender;
};

// Replaces whole-word, case-insensitive occurrences of `from` with `to`. A
// capitalized match gets a capitalized replacement. Returns the number of
// replacements through `count` when non-null.
std::string swap_term(std::string_view text, std::string_view from, std::string_view to,
                      std::size_t* count = nullptr);

struct BiasCase {
  SwapPair pair;
  std::string query;
  std::string counterfactual_query;
  std::string response;
  std::string counterfactual_response;
  // counterfactual minus original
  double sentiment_delta = 0.0;
  double relevancy_delta = 0.0;
};

struct DimensionSummary {
  double max_abs_sentiment_delta = 0.0;
  double max_abs_relevancy_delta = 0.0;
  bool flagged = false;  // either maximum above the tolerance
};

struct BiasReport {
  double tolerance = 0.0;
  std::vector<BiasCase> cases;
  std::map<std::string, DimensionSummary> dimensions;

  nlohmann::json to_json() const;
};

// Answers a query; the system under test lives behind this callable.
using QueryRunner = std::function<std::string(const std::string& query)>;

// Runs the template and its counterfactual through `runner` for each pair.
// Throws InvalidArgument naming the pair when the template lacks its term.
BiasReport bias_probe(const std::string& query_template, const std::vector<SwapPair>& pairs,
                      const QueryRunner& runner, providers::Classifier& sentiment,
                      providers::Embedder& embedder, double tolerance);

enum class PiiKind { kEmail, kPhone, kAccountNumber, kSsnLike, kPersonName };

std::string_view pii_kind_name(PiiKind kind);
PiiKind parse_pii_kind(std::string_view name);

struct PiiFinding {
  PiiKind kind = PiiKind::kEmail;
  std::size_t begin = 0;  // byte offsets, [begin, end)
  std::size_t end = 0;
  std::string text;
  std::string rule_id;

  nlohmann::json to_json() const;
  bool operator==(const PiiFinding&) const = default;
};

struct PiiRule {
  std::string rule_id;
  PiiKind kind = PiiKind::kEmail;
  std::string pattern;
};

class PrivacyScanner {
 public:
  // Rules file: one "rule_id<TAB>kind<TAB>regex" per line, '#' comments.
  // Gazetteer: one name per line, matched case-sensitively on word bounds.
  PrivacyScanner(std::vector<PiiRule> rules, std::vector<std::string> gazetteer);

  static PrivacyScanner defaults();
  static PrivacyScanner load(const std::filesystem::path& rules_file,
                             const std::filesystem::path& gazetteer_file);
  static std::vector<PiiRule> parse_rules(std::string_view text);

  const std::vector<PiiRule>& rules() const { return rules_; }

  // Findings ordered by (begin, end, rule_id).
  std::vector<PiiFinding> scan(std::string_view text) const;

 private:
  std::vector<PiiRule> rules_;
  std::vector<std::regex> compiled_;
  std::vector<std::string> gazetteer_;
};

std::string_view default_pii_rules_text();
std::string_view default_gazetteer_text();

std::vector<PiiFinding> privacy_scan(std::string_view text);

}  // namespace ragval::risk
