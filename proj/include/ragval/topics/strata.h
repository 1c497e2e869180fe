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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragval/common/matrix.h"
#include "ragval/corpus/corpus.h"
#include "ragval/topics/pca.h"

namespace ragval::topics {

inline constexpr const char* kNoiseStratumId = "noise";

struct Stratum {
  std::string stratum_id;
  std::vector<std::string> chunk_ids;
  std::vector<double> centroid;  // reduced space
  std::vector<std::string> keywords;
  bool is_noise = false;
};

// Groups chunks by label (kNoise goes to a dedicated noise stratum). Strata
// are numbered s0, s1, ... in order of their first member; the noise stratum,
// when present, comes last.
std::vector<Stratum> build_strata(const std::vector<std::string>& chunk_ids,
                                  const std::vector<int>& labels, const Matrix& reduced);

// Throws InvalidArgument unless every chunk id is in exactly one stratum.
void check_partition(const std::vector<Stratum>& strata,
                     const std::vector<std::string>& chunk_ids);

struct KeywordScore {
  std::string term;
  double score = 0.0;
};

// Top-k terms of strata[index] by (term frequency within the stratum) *
// ln(S / number of strata containing the term). With a single stratum the
// frequency alone ranks. Ties break lexicographically.
std::vector<KeywordScore> extract_keywords(const std::vector<Stratum>& strata,
                                           std::size_t index, const corpus::Corpus& corpus,
                                           std::size_t k);

enum class ClusterMethod { kKMeans, kDbscan };

struct TopicsConfig {
  std::size_t reduced_dims = 0;  // 0: min(10, d, n - 1)
  ClusterMethod method = ClusterMethod::kKMeans;
  std::size_t k = 0;  // 0: best silhouette over [2, min(12, n / 3)]
  double eps = 0.5;
  std::size_t min_pts = 4;
  std::size_t keywords = 5;
  std::uint64_t seed = 0;
};

struct TopicModel {
  ReducedMatrix reducer;
  std::vector<Stratum> strata;
  std::vector<std::string> chunk_ids;
  std::vector<int> labels;
  std::string method;
  std::size_t k = 0;
  double silhouette = 0.0;
  std::vector<std::pair<std::size_t, double>> k_search;  // (k, silhouette)
  TopicsConfig config;

  // {strata: [{stratum_id, chunk_ids, keywords, size, is_noise, centroid}],
  //  reducer: {r, explained_variance}, clustering: {...}}
  nlohmann::json to_json() const;
  // chunk_id,stratum_id,x,y over the first two reduced coordinates.
  std::string coordinates_csv() const;
};

// Strata as stored in the topics artifact.
std::vector<Stratum> strata_from_json(const nlohmann::json& artifact);

// Reduce, cluster, package strata and label them. `embeddings` rows align
// with corpus.chunks().
TopicModel build_topics(const corpus::Corpus& corpus, const Matrix& embeddings,
                        const TopicsConfig& config);

}  // namespace ragval::topics
