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

// The RAG system under test, seen as a callable:
//   request {query, context?} -> response {answer, retrieved_context[]}

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragval/corpus/corpus.h"
#include "ragval/providers/embedding.h"
#include "ragval/providers/transport.h"

namespace ragval::robustness {

struct RagRequest {
  std::string query;
  std::optional<std::vector<std::string>> context;  // bypasses retrieval when set

  nlohmann::json to_json() const;
};

struct RagResponse {
  std::string answer;
  std::vector<std::string> retrieved_context;

  static RagResponse from_json(const nlohmann::json& j);
};

class RagRunner {
 public:
  virtual ~RagRunner() = default;
  virtual RagResponse run(const RagRequest& request) = 0;
};

// Extractive stand-in: retrieves the top_k chunks by cosine to the query and
// answers with the answer_sentences context sentences closest to the query,
// in context order.
class MockRagRunner : public RagRunner {
 public:
  MockRagRunner(const corpus::Corpus& corpus, std::shared_ptr<providers::Embedder> embedder,
                std::size_t top_k = 2, std::size_t answer_sentences = 2);
  RagResponse run(const RagRequest& request) override;

 private:
  const corpus::Corpus& corpus_;
  std::shared_ptr<providers::Embedder> embedder_;
  std::vector<providers::EmbeddingVector> chunk_vectors_;
  std::size_t top_k_;
  std::size_t answer_sentences_;
};

class HttpRagRunner : public RagRunner {
 public:
  HttpRagRunner(std::shared_ptr<providers::Transport> transport, providers::RetryPolicy retry);
  RagResponse run(const RagRequest& request) override;

 private:
  std::shared_ptr<providers::Transport> transport_;
  providers::RetryPolicy retry_;
};

// Runs `command` through /bin/sh with the request JSON on stdin and parses
// the response JSON from stdout. A non-zero exit status is an error.
class CommandRagRunner : public RagRunner {
 public:
  explicit CommandRagRunner(std::string command) : command_(std::move(command)) {}
  RagResponse run(const RagRequest& request) override;

 private:
  std::string command_;
};

}  // namespace ragval::robustness
