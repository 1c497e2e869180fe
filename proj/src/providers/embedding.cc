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

#include "ragval/providers/embedding.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "ragval/common/hash.h"
#include "ragval/common/io.h"
#include "ragval/common/text.h"
#include "ragval/simd/kernels.h"

namespace ragval::providers {

using nlohmann::json;

namespace {

std::vector<std::string> content_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  const auto words = text::word_tokens(text);
  for (const auto& w : words) {
    if (text::is_stopword(w)) continue;
    std::string t = w;
    if (t.size() > 3 && t.back() == 's' && t[t.size() - 2] != 's') t.pop_back();
    tokens.push_back(std::move(t));
  }
  if (tokens.empty()) tokens = words;
  if (tokens.empty()) tokens.push_back(text);
  return tokens;
}

}  // namespace

MockEmbedder::MockEmbedder(std::string model_id, std::size_t dimension,
                           std::uint64_t seed)
    : model_id_(std::move(model_id)), dimension_(dimension), seed_(seed) {
  if (dimension_ < 1) throw InvalidArgument("mock embedder: dimension must be >= 1");
}

EmbeddingVector MockEmbedder::embed_one(const std::string& text) const {
  std::vector<double> v(dimension_, 0.0);
  const std::uint64_t base = mix64(seed_ ^ fnv1a64(model_id_));
  for (const auto& token : content_tokens(text)) {
    std::uint64_t state = base ^ fnv1a64(token);
    for (std::size_t k = 0; k < dimension_; ++k) {
      const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
      v[k] += 2.0 * u - 1.0;
    }
  }
  const double norm = std::sqrt(simd::dot(v, v));
  for (double& x : v) x /= norm;
  return EmbeddingVector{std::move(v), model_id_};
}

std::vector<EmbeddingVector> MockEmbedder::embed(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

HttpEmbedder::HttpEmbedder(ProviderConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.validate();
}

std::vector<EmbeddingVector> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  const std::size_t n = texts.size();
  std::vector<EmbeddingVector> out(n);
  std::vector<std::pair<std::size_t, std::size_t>> batches;
  for (std::size_t s = 0; s < n; s += config_.batch_size) {
    batches.emplace_back(s, std::min(n, s + config_.batch_size));
  }
  auto run_batch = [&](std::size_t begin, std::size_t end) {
    json body = {{"model", config_.model_id},
                 {"inputs", std::vector<std::string>(texts.begin() + begin,
                                                     texts.begin() + end)}};
    std::vector<std::size_t> indices(end - begin);
    for (std::size_t i = begin; i < end; ++i) indices[i - begin] = i;
    json resp;
    try {
      resp = with_retries(config_.retry, [&] { return transport_->post(body); });
    } catch (const ProviderError& e) {
      throw ProviderError(std::string("embedding batch failed: ") + e.what(), indices);
    }
    const auto it = resp.find("vectors");
    if (it == resp.end() || !it->is_array() || it->size() != end - begin) {
      throw ProviderError("embedding response lacks one vector per input", indices);
    }
    for (std::size_t i = begin; i < end; ++i) {
      auto values = (*it)[i - begin].get<std::vector<double>>();
      if (values.size() != config_.dimension) {
        throw InvalidArgument("embedding dimension mismatch for model " +
                              config_.model_id + ": got " + std::to_string(values.size()) +
                              ", declared " + std::to_string(config_.dimension));
      }
      out[i] = EmbeddingVector{std::move(values), config_.model_id};
    }
  };
  // Waves of at most max_in_flight concurrent batches.
  for (std::size_t w = 0; w < batches.size(); w += config_.max_in_flight) {
    const std::size_t wave_end = std::min(batches.size(), w + config_.max_in_flight);
    if (wave_end - w == 1) {
      run_batch(batches[w].first, batches[w].second);
      continue;
    }
    std::vector<std::future<void>> wave;
    for (std::size_t b = w; b < wave_end; ++b) {
      wave.push_back(std::async(std::launch::async, run_batch, batches[b].first,
                                batches[b].second));
    }
    for (auto& f : wave) f.get();
  }
  return out;
}

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(*path_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json row = json::parse(line);
      auto vec = row.at("vector").get<std::vector<double>>();
      if (vec.empty()) throw std::runtime_error("empty vector");
      entries_[{row.at("model_id").get<std::string>(),
                row.at("text_sha256").get<std::string>()}] = std::move(vec);
    } catch (const std::exception& e) {
      ++skipped_lines_;
      spdlog::warn("embedding cache {}:{}: skipping corrupt line ({})",
                   path_->string(), line_no, e.what());
    }
  }
}

std::optional<std::vector<double>> EmbeddingCache::lookup(
    const std::string& model_id, const std::string& text_sha256) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find({model_id, text_sha256});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::insert(const std::string& model_id, const std::string& text_sha256,
                            const std::vector<double>& vector) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = entries_.try_emplace({model_id, text_sha256}, vector);
  if (!inserted || !path_) return;
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  std::ofstream out(*path_, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot append to embedding cache " + path_->string());
  out << json{{"model_id", model_id}, {"text_sha256", text_sha256}, {"vector", vector}}.dump()
      << '\n';
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

CachedEmbedder::CachedEmbedder(std::shared_ptr<Embedder> inner,
                               std::shared_ptr<EmbeddingCache> cache)
    : inner_(std::move(inner)), cache_(std::move(cache)) {}

std::vector<EmbeddingVector> CachedEmbedder::embed(const std::vector<std::string>& texts) {
  const std::string& model = inner_->model_id();
  std::vector<EmbeddingVector> out(texts.size());
  std::vector<std::string> hashes(texts.size());
  std::vector<std::string> misses;
  std::unordered_map<std::string, std::vector<std::size_t>> miss_slots;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    hashes[i] = sha256_hex(texts[i]);
    if (auto hit = cache_->lookup(model, hashes[i])) {
      out[i] = EmbeddingVector{std::move(*hit), model};
      continue;
    }
    auto [it, fresh] = miss_slots.try_emplace(hashes[i]);
    if (fresh) misses.push_back(texts[i]);
    it->second.push_back(i);
  }
  if (misses.empty()) return out;
  std::vector<EmbeddingVector> fetched;
  try {
    fetched = inner_->embed(misses);
  } catch (const ProviderError& e) {
    // Map indices within `misses` back to the caller's positions.
    std::vector<std::size_t> caller;
    for (std::size_t m : e.indices()) {
      for (std::size_t slot : miss_slots.at(sha256_hex(misses.at(m)))) caller.push_back(slot);
    }
    std::sort(caller.begin(), caller.end());
    throw ProviderError(e.what(), std::move(caller));
  }
  for (std::size_t m = 0; m < misses.size(); ++m) {
    const std::string h = sha256_hex(misses[m]);
    cache_->insert(model, h, fetched[m].values);
    for (std::size_t slot : miss_slots.at(h)) out[slot] = fetched[m];
  }
  return out;
}

std::vector<EmbeddingVector> embed_batch(Embedder& embedder,
                                         const std::vector<std::string>& texts) {
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) {
      throw InvalidArgument("embed_batch: text " + std::to_string(i) + " is empty");
    }
  }
  auto out = embedder.embed(texts);
  if (out.size() != texts.size()) {
    throw ProviderError("embedder returned " + std::to_string(out.size()) +
                        " vectors for " + std::to_string(texts.size()) + " texts");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].values.size() != embedder.dimension()) {
      throw InvalidArgument("embedding " + std::to_string(i) + " has dimension " +
                            std::to_string(out[i].values.size()) + ", declared " +
                            std::to_string(embedder.dimension()));
    }
    for (double x : out[i].values) {
      if (!std::isfinite(x)) {
        throw InvalidArgument("embedding " + std::to_string(i) + " has a non-finite entry");
      }
    }
  }
  return out;
}

std::shared_ptr<Embedder> make_embedder(const ProviderConfig& config,
                                        std::shared_ptr<EmbeddingCache> cache) {
  config.validate();
  std::shared_ptr<Embedder> base;
  if (config.is_mock()) {
    base = std::make_shared<MockEmbedder>(config);
  } else {
    base = std::make_shared<HttpEmbedder>(config, std::make_shared<HttpTransport>(config));
  }
  if (cache) return std::make_shared<CachedEmbedder>(std::move(base), std::move(cache));
  return base;
}

}  // namespace ragval::providers
