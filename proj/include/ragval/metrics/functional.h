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

// Sentence-level embedding metrics for RAG outputs. Every directional score
// is built on one primitive, max_sim_profile(source, target), which records
// for each source sentence its best cosine match in the target:
//
//   context relevancy   query   -> context
//   groundedness        answer  -> context
//   completeness        context -> answer
//   answer relevancy    answer  -> query
//
// and then aggregates the profile by mean, weighted mean or minimax.

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragval/providers/embedding.h"
#include "ragval/providers/nli.h"

namespace ragval::metrics {

using providers::EmbeddingVector;

enum class Role { kQuery, kContext, kAnswer };
enum class Aggregation { kMean, kWeighted, kMinimax };

std::string_view role_name(Role role);
std::string_view aggregation_name(Aggregation kind);
Aggregation parse_aggregation(std::string_view name);

inline constexpr std::size_t kNoMatch = std::numeric_limits<std::size_t>::max();

// Scores below this are flagged unless the caller overrides it.
inline constexpr double kDefaultFlagThreshold = 0.5;

struct SentenceSet {
  Role role = Role::kQuery;
  std::vector<std::string> texts;  // may be empty when only vectors are known
  std::vector<EmbeddingVector> embeddings;
  std::vector<double> weights;  // empty, or one non-negative weight per sentence summing to 1

  std::size_t size() const { return embeddings.size(); }
  // Throws InvalidArgument: empty set, texts/weights length mismatch, invalid
  // weights, mixed model ids or dimensions.
  void validate() const;
};

// Embeds `sentences` with `embedder` into a set with the given role.
SentenceSet make_sentence_set(Role role, std::vector<std::string> sentences,
                              providers::Embedder& embedder,
                              std::vector<double> weights = {});

struct SentenceMatch {
  std::size_t index = 0;
  double value = 0.0;           // S_max, or sigma(D) for the NLI variant
  std::size_t match = kNoMatch;  // argmax target index, lowest index on ties
};

using Profile = std::vector<SentenceMatch>;

struct MetricScore {
  double value = 0.0;
  Aggregation aggregation = Aggregation::kMean;
  Profile per_sentence;
  std::vector<std::size_t> flagged;  // source indices with value < threshold
  std::size_t least = kNoMatch;      // argmin over per_sentence, lowest index on ties
  std::vector<std::string> notes;
};

nlohmann::json to_json(const MetricScore& score);
MetricScore metric_score_from_json(const nlohmann::json& j);

// dot(u, v) / (|u| |v|), clamped to [-1, 1]. Throws DegenerateInput on a
// zero-norm vector and InvalidArgument on model or dimension mismatch.
double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v);

// n x m cosine matrix, row-major.
std::vector<double> similarity_matrix(const SentenceSet& source, const SentenceSet& target);

Profile max_sim_profile(const SentenceSet& source, const SentenceSet& target);

// mean: (1/m) sum; weighted: sum w_i v_i (weights required, and only then);
// minimax: min.
double aggregate(const Profile& profile, Aggregation kind,
                 std::span<const double> weights = {});

// 1 / (1 + e^-d), evaluated without overflow for large |d|.
double logistic(double d);

MetricScore context_relevancy(const SentenceSet& query, const SentenceSet& context,
                              Aggregation kind,
                              double flag_threshold = kDefaultFlagThreshold);

// Mean-aggregated; `least` is the least grounded answer sentence.
MetricScore groundedness_sim(const SentenceSet& answer, const SentenceSet& context,
                             double flag_threshold = kDefaultFlagThreshold);

// For each answer sentence a_i: premise = the `premise_top_k` context
// sentences most similar to a_i (in context order), hypothesis = a_i;
// value_i = logistic(z_i / scale_i). Score = mean value_i. Needs texts.
MetricScore groundedness_nli(const SentenceSet& answer, const SentenceSet& context,
                             providers::NliProvider& nli,
                             double flag_threshold = kDefaultFlagThreshold,
                             std::size_t premise_top_k = 3);

// kind is mean or weighted (weights from the context set).
MetricScore completeness_sim(const SentenceSet& context, const SentenceSet& answer,
                             Aggregation kind,
                             double flag_threshold = kDefaultFlagThreshold);

// Uniform-weight transport cost: mean over all n*k pairs of the cosine
// distance 1 - cos(c_i, a_j). Lower means more complete.
double completeness_wasserstein(const SentenceSet& context, const SentenceSet& answer);

MetricScore answer_relevancy(const SentenceSet& answer, const SentenceSet& query,
                             Aggregation kind,
                             double flag_threshold = kDefaultFlagThreshold);

}  // namespace ragval::metrics
