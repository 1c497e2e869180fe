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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragval/corpus/corpus.h"
#include "ragval/providers/embedding.h"
#include "ragval/providers/generator.h"
#include "ragval/topics/strata.h"

namespace ragval::testgen {

enum class QueryType { kSimpleFactual, kMultiHop, kInference, kYesNo, kMultipleChoice };

inline constexpr std::array<QueryType, 5> kAllQueryTypes = {
    QueryType::kSimpleFactual, QueryType::kMultiHop, QueryType::kInference,
    QueryType::kYesNo, QueryType::kMultipleChoice};

std::string_view query_type_name(QueryType type);
QueryType parse_query_type(std::string_view name);

enum class SamplingMode { kProportional, kWeighted };

struct SamplingSpec {
  std::size_t total_budget = 20;
  SamplingMode mode = SamplingMode::kProportional;
  std::map<std::string, double> weights;  // stratum_id -> weight (weighted mode)
  std::uint64_t seed = 0;

  void validate() const;
};

struct TestQuery {
  std::string query_id;
  std::string text;
  QueryType query_type = QueryType::kSimpleFactual;
  std::string stratum_id;
  std::vector<std::string> source_chunk_ids;
  std::vector<std::string> key_facts;
  bool ood = false;

  nlohmann::json to_json() const;
  static TestQuery from_json(const nlohmann::json& j);
};

// Largest-remainder apportionment with a floor of one per non-empty stratum.
// Strata whose proportional quota falls below one are pinned at one and the
// rest of the budget is re-apportioned among the others; the final split
// hands out floor(quota) and then the leftover units by descending fractional
// part (lowest index on ties). `shares` are sizes (proportional) or weights.
// Throws InvalidArgument when budget < number of non-empty strata or all
// shares are zero.
std::vector<std::size_t> allocate_budget(std::span<const std::size_t> sizes,
                                         std::span<const double> shares, std::size_t budget);

// Over the non-noise strata. Returns stratum_id -> count.
std::map<std::string, std::size_t> allocate_budget(const std::vector<topics::Stratum>& strata,
                                                   const SamplingSpec& spec);

// Seeded uniform sample without replacement, returned in stratum order.
std::vector<std::string> sample_chunks(const topics::Stratum& stratum, std::size_t count,
                                       std::uint64_t seed);

// Declarative sentences (ending in '.', at least 3 words) that carry a
// number, a capitalized word past the first position, or a definitional verb.
std::vector<std::string> extract_key_facts(const corpus::Chunk& chunk);

// Prompt template per query type, with {fact} or {fact_a}/{fact_b}
// placeholders.
class PromptTemplates {
 public:
  static PromptTemplates defaults();
  // Reads <type>.txt for every type from `dir`.
  static PromptTemplates load(const std::filesystem::path& dir);

  const std::string& get(QueryType type) const;
  void set(QueryType type, std::string text);
  std::string render(QueryType type, const std::vector<std::string>& facts) const;

 private:
  std::map<QueryType, std::string> templates_;
};

struct SkipRecord {
  std::vector<std::string> chunk_ids;
  std::string query_type;
  std::string reason;

  nlohmann::json to_json() const;
};

// One query per requested type from `chunks`. Multi-hop takes its facts from
// chunks[0] and chunks[1]. `fact_offset` rotates which fact each type uses.
// Chunks without facts produce skip records instead of queries.
std::vector<TestQuery> generate_queries(const std::vector<const corpus::Chunk*>& chunks,
                                        std::span<const QueryType> types,
                                        providers::Generator& generator,
                                        const PromptTemplates& templates,
                                        const std::string& stratum_id,
                                        std::vector<SkipRecord>* skips = nullptr,
                                        std::size_t fact_offset = 0);

struct Rejection {
  TestQuery query;
  double score = 0.0;
};

struct Selection {
  std::vector<TestQuery> accepted;
  std::vector<Rejection> rejected;
  std::vector<double> accepted_scores;
};

// Mean context relevancy of each query against its own source chunks;
// accepted iff score >= tau.
Selection select_queries(const std::vector<TestQuery>& queries, const corpus::Corpus& corpus,
                         providers::Embedder& embedder, double tau);

struct TestgenConfig {
  SamplingSpec sampling;
  std::vector<QueryType> types{kAllQueryTypes.begin(), kAllQueryTypes.end()};
  double relevancy_threshold = 0.3;
};

struct TestSet {
  std::map<std::string, std::size_t> allocation;
  std::vector<TestQuery> queries;  // accepted, canonical order
  std::vector<Rejection> rejected;
  std::vector<SkipRecord> skips;

  std::string queries_jsonl() const;
  nlohmann::json report_json() const;
};

std::vector<TestQuery> load_queries_jsonl(std::string_view text);

// Allocation, sampling, generation and selection over all strata. Output is
// ordered by (stratum_id, first source chunk, query type, text).
TestSet build_test_set(const corpus::Corpus& corpus, const std::vector<topics::Stratum>& strata,
                       const TestgenConfig& config, providers::Generator& generator,
                       providers::Embedder& embedder,
                       const PromptTemplates& templates = PromptTemplates::defaults());

}  // namespace ragval::testgen
