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

// Scores one (query, retrieved context, answer) triple on every functional
// metric.

#include <map>
#include <string>
#include <vector>

#include "ragval/metrics/functional.h"

namespace ragval::metrics {

inline constexpr const char* kContextRelevancy = "c_relevancy";
inline constexpr const char* kGroundednessSim = "groundedness_sim";
inline constexpr const char* kGroundednessNli = "groundedness_nli";
inline constexpr const char* kCompletenessSim = "completeness_sim";
inline constexpr const char* kCompletenessW = "completeness_w";
inline constexpr const char* kAnswerRelevancy = "a_relevancy";

// In report order.
const std::vector<std::string>& functional_metric_names();

struct EvalSettings {
  Aggregation context_relevancy = Aggregation::kMean;
  Aggregation completeness = Aggregation::kMean;
  Aggregation answer_relevancy = Aggregation::kMean;
  double flag_threshold = kDefaultFlagThreshold;
  std::size_t nli_premise_top_k = 3;
};

// Sentences of `text` with whitespace-only pieces dropped.
std::vector<std::string> split_sentences(const std::string& text);

// Metric name -> score. completeness_w carries the distance as its value.
// Throws InvalidArgument when the query, context or answer has no sentence.
std::map<std::string, MetricScore> score_functional(const std::string& query,
                                                    const std::vector<std::string>& context,
                                                    const std::string& answer,
                                                    providers::Embedder& embedder,
                                                    providers::NliProvider& nli,
                                                    const EvalSettings& settings = {});

}  // namespace ragval::metrics
