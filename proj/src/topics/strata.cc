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

#include "ragval/topics/strata.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "ragval/common/io.h"
#include "ragval/common/text.h"
#include "ragval/simd/kernels.h"
#include "ragval/topics/cluster.h"

namespace ragval::topics {

using nlohmann::json;

namespace {

bool is_keyword_token(const std::string& w) {
  if (w.size() < 3 || text::is_stopword(w)) return false;
  return std::any_of(w.begin(), w.end(),
                     [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
}

}  // namespace

std::vector<Stratum> build_strata(const std::vector<std::string>& chunk_ids,
                                  const std::vector<int>& labels, const Matrix& reduced) {
  if (labels.size() != chunk_ids.size() || reduced.rows() != chunk_ids.size()) {
    throw InvalidArgument("build_strata: chunk, label and row counts differ");
  }
  std::map<int, std::size_t> slot;
  std::vector<Stratum> strata;
  std::vector<std::vector<std::size_t>> members;
  Stratum noise{kNoiseStratumId, {}, {}, {}, true};
  std::vector<std::size_t> noise_members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) {
      noise.chunk_ids.push_back(chunk_ids[i]);
      noise_members.push_back(i);
      continue;
    }
    auto [it, fresh] = slot.try_emplace(labels[i], strata.size());
    if (fresh) {
      strata.push_back(Stratum{"s" + std::to_string(strata.size()), {}, {}, {}, false});
      members.emplace_back();
    }
    strata[it->second].chunk_ids.push_back(chunk_ids[i]);
    members[it->second].push_back(i);
  }
  if (!noise.chunk_ids.empty()) {
    strata.push_back(std::move(noise));
    members.push_back(std::move(noise_members));
  }
  for (std::size_t s = 0; s < strata.size(); ++s) {
    std::vector<double> c(reduced.cols(), 0.0);
    for (std::size_t i : members[s]) simd::axpy(1.0, reduced.row(i), c);
    for (double& v : c) v /= static_cast<double>(members[s].size());
    strata[s].centroid = std::move(c);
  }
  return strata;
}

void check_partition(const std::vector<Stratum>& strata,
                     const std::vector<std::string>& chunk_ids) {
  std::map<std::string, int> seen;
  for (const auto& s : strata) {
    if (s.chunk_ids.empty()) throw InvalidArgument("stratum " + s.stratum_id + " is empty");
    for (const auto& id : s.chunk_ids) ++seen[id];
  }
  for (const auto& id : chunk_ids) {
    auto it = seen.find(id);
    if (it == seen.end()) throw InvalidArgument("chunk " + id + " is in no stratum");
    if (it->second != 1) throw InvalidArgument("chunk " + id + " is in several strata");
  }
  if (seen.size() != chunk_ids.size()) {
    throw InvalidArgument("strata mention chunks outside the corpus");
  }
}

std::vector<KeywordScore> extract_keywords(const std::vector<Stratum>& strata,
                                           std::size_t index, const corpus::Corpus& corpus,
                                           std::size_t k) {
  if (index >= strata.size()) throw InvalidArgument("extract_keywords: no such stratum");
  if (strata[index].chunk_ids.empty()) throw InvalidArgument("extract_keywords: empty stratum");
  std::vector<std::map<std::string, std::size_t>> counts(strata.size());
  std::vector<std::size_t> totals(strata.size(), 0);
  for (std::size_t s = 0; s < strata.size(); ++s) {
    for (const auto& id : strata[s].chunk_ids) {
      const corpus::Chunk* chunk = corpus.find_chunk(id);
      if (!chunk) throw InvalidArgument("extract_keywords: unknown chunk " + id);
      for (const auto& w : text::word_tokens(chunk->text())) {
        if (!is_keyword_token(w)) continue;
        ++counts[s][w];
        ++totals[s];
      }
    }
  }
  std::map<std::string, std::size_t> doc_freq;
  for (const auto& c : counts) {
    for (const auto& [term, _] : c) ++doc_freq[term];
  }
  const double strata_count = static_cast<double>(strata.size());
  std::vector<KeywordScore> scored;
  for (const auto& [term, count] : counts[index]) {
    const double tf = static_cast<double>(count) / static_cast<double>(totals[index]);
    const double idf = strata.size() == 1
                           ? 1.0
                           : std::log(strata_count / static_cast<double>(doc_freq[term]));
    scored.push_back({term, tf * idf});
  }
  std::sort(scored.begin(), scored.end(), [](const KeywordScore& a, const KeywordScore& b) {
    return a.score != b.score ? a.score > b.score : a.term < b.term;
  });
  if (scored.size() > k) scored.resize(k);
  return scored;
}

json TopicModel::to_json() const {
  json strata_json = json::array();
  for (const auto& s : strata) {
    strata_json.push_back({{"stratum_id", s.stratum_id},
                           {"chunk_ids", s.chunk_ids},
                           {"keywords", s.keywords},
                           {"size", s.chunk_ids.size()},
                           {"is_noise", s.is_noise},
                           {"centroid", s.centroid}});
  }
  json search = json::array();
  for (const auto& [kk, sil] : k_search) search.push_back({{"k", kk}, {"silhouette", sil}});
  json clustering = {{"method", method},
                     {"k", k},
                     {"silhouette", silhouette},
                     {"seed", config.seed},
                     {"k_search", std::move(search)}};
  if (config.method == ClusterMethod::kDbscan) {
    clustering["eps"] = config.eps;
    clustering["min_pts"] = config.min_pts;
  }
  return {{"strata", std::move(strata_json)},
          {"reducer",
           {{"method", "pca"},
            {"r", reducer.components.rows()},
            {"explained_variance", reducer.explained_variance}}},
          {"clustering", std::move(clustering)}};
}

std::string TopicModel::coordinates_csv() const {
  std::map<std::string, std::string> owner;
  for (const auto& s : strata) {
    for (const auto& id : s.chunk_ids) owner[id] = s.stratum_id;
  }
  std::string out = "chunk_id,stratum_id,x,y\n";
  for (std::size_t i = 0; i < chunk_ids.size(); ++i) {
    const double x = reducer.rows(i, 0);
    const double y = reducer.rows.cols() > 1 ? reducer.rows(i, 1) : 0.0;
    out += chunk_ids[i] + "," + owner[chunk_ids[i]] + "," + io::format_double(x) + "," +
           io::format_double(y) + "\n";
  }
  return out;
}

std::vector<Stratum> strata_from_json(const json& artifact) {
  std::vector<Stratum> out;
  for (const auto& s : artifact.at("strata")) {
    out.push_back(Stratum{s.at("stratum_id").get<std::string>(),
                          s.at("chunk_ids").get<std::vector<std::string>>(),
                          s.value("centroid", std::vector<double>{}),
                          s.value("keywords", std::vector<std::string>{}),
                          s.value("is_noise", false)});
  }
  return out;
}

TopicModel build_topics(const corpus::Corpus& corpus, const Matrix& embeddings,
                        const TopicsConfig& config) {
  const std::size_t n = embeddings.rows();
  if (n != corpus.chunks().size()) {
    throw InvalidArgument("build_topics: one embedding row per chunk required");
  }
  if (n < 2) throw InvalidArgument("build_topics: need at least 2 chunks");
  TopicModel model;
  model.config = config;
  const std::size_t max_r = std::min(n - 1, embeddings.cols());
  const std::size_t r = config.reduced_dims == 0 ? std::min<std::size_t>(10, max_r)
                                                 : config.reduced_dims;
  model.reducer = pca_reduce(embeddings, r);
  for (const auto& c : corpus.chunks()) model.chunk_ids.push_back(c.chunk_id);
  const Matrix& y = model.reducer.rows;

  if (config.method == ClusterMethod::kKMeans) {
    model.method = "kmeans";
    std::size_t k = config.k;
    if (k == 0) {
      const std::size_t hi = std::min<std::size_t>(12, n / 3);
      if (hi < 2) {
        k = 1;
      } else {
        double best = -2.0;
        for (std::size_t cand = 2; cand <= hi; ++cand) {
          const auto res = kmeans(y, cand, config.seed);
          const std::vector<int> lab(res.labels.begin(), res.labels.end());
          const double sil = silhouette(y, lab);
          model.k_search.emplace_back(cand, sil);
          if (sil > best) {
            best = sil;
            k = cand;
          }
        }
      }
    }
    const auto res = kmeans(y, k, config.seed);
    model.labels.assign(res.labels.begin(), res.labels.end());
    model.k = k;
  } else {
    model.method = "dbscan";
    const auto res = dbscan(y, config.eps, config.min_pts);
    model.labels = res.labels;
    model.k = res.clusters;
  }
  model.silhouette = silhouette(y, model.labels);
  model.strata = build_strata(model.chunk_ids, model.labels, y);
  check_partition(model.strata, model.chunk_ids);
  for (std::size_t s = 0; s < model.strata.size(); ++s) {
    for (auto& kw : extract_keywords(model.strata, s, corpus, config.keywords)) {
      model.strata[s].keywords.push_back(std::move(kw.term));
    }
  }
  return model;
}

}  // namespace ragval::topics
