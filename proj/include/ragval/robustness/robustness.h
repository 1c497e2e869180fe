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

// Seeded input perturbations and a suite that measures how much each one
// moves the functional metrics.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragval/corpus/corpus.h"
#include "ragval/metrics/evaluate.h"
#include "ragval/providers/embedding.h"
#include "ragval/providers/nli.h"
#include "ragval/robustness/runner.h"
#include "ragval/testgen/testgen.h"
#include "ragval/topics/strata.h"

namespace ragval::robustness {

enum class PerturbationKind { kAdversarialDistractor, kOodQuery, kTypo, kColloquial };

std::string_view perturbation_kind_name(PerturbationKind kind);
PerturbationKind parse_perturbation_kind(std::string_view name);

struct Perturbation {
  PerturbationKind kind = PerturbationKind::kTypo;
  std::uint64_t seed = 0;
  double rate = 0.0;                // typo / colloquial
  std::string distractor_chunk_id;  // adversarial_distractor
  std::size_t position = 0;         // adversarial_distractor: insertion index

  nlohmann::json to_json() const;
};

// A word is a maximal run of ASCII letters. Each word of length >= 3 is, with
// probability `rate`, edited once: adjacent swap, drop or duplicate of one
// character. Every edit changes the word. `edited` receives the edit count.
std::string perturb_typos(std::string_view text, double rate, std::uint64_t seed,
                          std::size_t* edited = nullptr);

// Informal rewrite: each matching phrase ("do not" -> "don't", "you" -> "u",
// ...) is replaced with probability `rate`.
std::string perturb_colloquial(std::string_view text, double rate, std::uint64_t seed);

struct InjectedContext {
  std::vector<std::string> sentences;
  std::vector<std::string> provenance;  // "" for original, else the distractor chunk id
};

// Splices the distractor's sentences into `context` before index `position`
// (clamped to the end). Throws InvalidArgument when both come from the same
// stratum.
InjectedContext inject_distractor(const std::vector<std::string>& context,
                                  const std::string& context_stratum,
                                  const corpus::Chunk& distractor,
                                  const std::string& distractor_stratum, std::size_t position);

inline constexpr double kDefaultOodCeiling = 0.3;

// Mean of the chunk embeddings of each non-noise stratum. `chunk_vectors`
// aligns with corpus.chunks().
std::vector<providers::EmbeddingVector> stratum_embedding_centroids(
    const std::vector<topics::Stratum>& strata, const corpus::Corpus& corpus,
    const std::vector<providers::EmbeddingVector>& chunk_vectors);

struct OodQuery {
  testgen::TestQuery query;
  double max_relevancy = 0.0;  // highest context relevancy against any centroid
};

// Non-empty lines of an OOD pool file; '#' starts a comment line.
std::vector<std::string> parse_ood_pool(std::string_view text);

// Draws pool entries in seeded order, keeping those whose context relevancy
// against every centroid is below `ceiling`. Throws InvalidArgument when the
// pool runs out first, with the number found.
std::vector<OodQuery> gen_ood_queries(const std::vector<std::string>& pool, std::size_t count,
                                      std::uint64_t seed,
                                      const std::vector<providers::EmbeddingVector>& centroids,
                                      providers::Embedder& embedder,
                                      double ceiling = kDefaultOodCeiling);

struct DistractorSource {
  const corpus::Chunk* chunk = nullptr;
  std::string stratum_id;
};

struct SuiteConfig {
  std::vector<PerturbationKind> kinds = {PerturbationKind::kTypo, PerturbationKind::kColloquial,
                                         PerturbationKind::kAdversarialDistractor};
  double typo_rate = 0.1;
  double colloquial_rate = 1.0;
  std::size_t distractor_position = 0;
  std::size_t worst_k = 5;
  std::uint64_t seed = 0;
  double ood_ceiling = kDefaultOodCeiling;
  metrics::EvalSettings eval;
};

struct DeltaRecord {
  std::string query_id;
  PerturbationKind kind = PerturbationKind::kTypo;
  Perturbation perturbation;
  std::string perturbed_query;
  std::map<std::string, double> clean;
  std::map<std::string, double> perturbed;
  std::map<std::string, double> delta;  // perturbed - clean
};

struct DeltaSummary {
  std::size_t n = 0;
  double mean_delta = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
  std::vector<std::pair<std::string, double>> worst;  // (query_id, delta), most negative first
};

struct SuiteFailure {
  std::string query_id;
  std::string kind;  // "clean" or a perturbation kind
  std::string error;
};

struct OodReview {
  std::string query_id;
  std::string query;
  std::string answer;
  double c_relevancy = 0.0;
};

struct RobustnessReport {
  SuiteConfig config;
  std::vector<DeltaRecord> records;                               // by (query_id, kind)
  std::map<std::string, std::map<std::string, DeltaSummary>> per_metric;  // metric -> kind
  std::vector<SuiteFailure> failures;
  std::vector<OodReview> ood_review;

  nlohmann::json to_json() const;
  // query_id,kind,metric,clean,perturbed,delta
  std::string to_csv() const;
};

// Runs every query clean and under each configured perturbation, scores all
// functional metrics and summarizes perturbed - clean per metric and kind.
// Runner failures are recorded and the suite moves on. OOD queries are run
// once and listed for human review.
RobustnessReport run_robustness_suite(const std::vector<testgen::TestQuery>& queries,
                                      RagRunner& runner, const SuiteConfig& config,
                                      providers::Embedder& embedder, providers::NliProvider& nli,
                                      const std::vector<DistractorSource>& distractors = {},
                                      const std::vector<testgen::TestQuery>& ood_queries = {});

}  // namespace ragval::robustness
