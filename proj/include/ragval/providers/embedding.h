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
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ragval/providers/config.h"
#include "ragval/providers/transport.h"

namespace ragval::providers {

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual const std::string& model_id() const = 0;
  virtual std::size_t dimension() const = 0;
  // One vector per text, order preserved.
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

// Seeded hash embedder. Each content token (lowercased, stopwords dropped,
// plural 's' stripped) maps to a pseudo-random direction drawn from
// (seed, model_id, token); a text is the unit-normalized sum over its token
// multiset. Texts sharing vocabulary get high cosine similarity.
class MockEmbedder : public Embedder {
 public:
  MockEmbedder(std::string model_id, std::size_t dimension, std::uint64_t seed);
  explicit MockEmbedder(const ProviderConfig& config)
      : MockEmbedder(config.model_id, config.dimension, config.seed) {}

  const std::string& model_id() const override { return model_id_; }
  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

  EmbeddingVector embed_one(const std::string& text) const;

 private:
  std::string model_id_;
  std::size_t dimension_;
  std::uint64_t seed_;
};

// Wire format: request {"model", "inputs": [...]} -> response {"vectors": [[...]]}.
// Requests are split into batches of config.batch_size, with up to
// config.max_in_flight batches outstanding.
class HttpEmbedder : public Embedder {
 public:
  HttpEmbedder(ProviderConfig config, std::shared_ptr<Transport> transport);

  const std::string& model_id() const override { return config_.model_id; }
  std::size_t dimension() const override { return config_.dimension; }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

 private:
  ProviderConfig config_;
  std::shared_ptr<Transport> transport_;
};

// Append-only JSONL store of {model_id, text_sha256, vector}. Loading skips
// (and counts) corrupt lines. Thread-safe; writes are serialized.
class EmbeddingCache {
 public:
  // In-memory only.
  EmbeddingCache() = default;
  // Loads existing entries; new entries are appended to the file.
  explicit EmbeddingCache(std::filesystem::path path);

  std::optional<std::vector<double>> lookup(const std::string& model_id,
                                            const std::string& text_sha256) const;
  void insert(const std::string& model_id, const std::string& text_sha256,
              const std::vector<double>& vector);

  std::size_t size() const;
  std::size_t skipped_lines() const { return skipped_lines_; }

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, std::vector<double>> entries_;
  std::size_t skipped_lines_ = 0;
};

// Serves hits from the cache and forwards only the distinct misses.
class CachedEmbedder : public Embedder {
 public:
  CachedEmbedder(std::shared_ptr<Embedder> inner, std::shared_ptr<EmbeddingCache> cache);

  const std::string& model_id() const override { return inner_->model_id(); }
  std::size_t dimension() const override { return inner_->dimension(); }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

 private:
  std::shared_ptr<Embedder> inner_;
  std::shared_ptr<EmbeddingCache> cache_;
};

// Checked entry point: rejects empty input strings, verifies one finite
// vector of the declared dimension per text.
std::vector<EmbeddingVector> embed_batch(Embedder& embedder,
                                         const std::vector<std::string>& texts);

// Mock or HTTP embedder per config, wrapped in `cache` when given.
std::shared_ptr<Embedder> make_embedder(const ProviderConfig& config,
                                        std::shared_ptr<EmbeddingCache> cache = nullptr);

}  // namespace ragval::providers
