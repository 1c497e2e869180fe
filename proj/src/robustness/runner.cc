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

#include "ragval/robustness/runner.h"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "ragval/common/error.h"
#include "ragval/common/io.h"
#include "ragval/metrics/evaluate.h"
#include "ragval/metrics/functional.h"

namespace ragval::robustness {

using nlohmann::json;

json RagRequest::to_json() const {
  json j = {{"query", query}};
  if (context) j["context"] = *context;
  return j;
}

RagResponse RagResponse::from_json(const json& j) {
  if (!j.is_object() || !j.contains("answer") || !j.at("answer").is_string()) {
    throw InvalidArgument("RAG response lacks a string \"answer\"");
  }
  RagResponse r;
  r.answer = j.at("answer").get<std::string>();
  if (j.contains("retrieved_context")) {
    r.retrieved_context = j.at("retrieved_context").get<std::vector<std::string>>();
  }
  return r;
}

MockRagRunner::MockRagRunner(const corpus::Corpus& corpus,
                             std::shared_ptr<providers::Embedder> embedder, std::size_t top_k,
                             std::size_t answer_sentences)
    : corpus_(corpus),
      embedder_(std::move(embedder)),
      top_k_(top_k),
      answer_sentences_(answer_sentences) {
  if (top_k_ == 0 || answer_sentences_ == 0) {
    throw InvalidArgument("mock runner: top_k and answer_sentences must be >= 1");
  }
  std::vector<std::string> texts;
  for (const auto& c : corpus_.chunks()) texts.push_back(c.text());
  if (texts.empty()) throw InvalidArgument("mock runner: empty corpus");
  chunk_vectors_ = providers::embed_batch(*embedder_, texts);
}

RagResponse MockRagRunner::run(const RagRequest& request) {
  RagResponse r;
  const auto qv = providers::embed_batch(*embedder_, {request.query}).front();
  if (request.context) {
    r.retrieved_context = *request.context;
  } else {
    std::vector<double> sims(chunk_vectors_.size());
    for (std::size_t i = 0; i < sims.size(); ++i) {
      sims[i] = metrics::cosine_similarity(qv, chunk_vectors_[i]);
    }
    std::vector<std::size_t> order(sims.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });
    order.resize(std::min(top_k_, order.size()));
    for (std::size_t i : order) r.retrieved_context.push_back(corpus_.chunks()[i].text());
  }
  std::vector<std::string> sentences;
  for (const auto& piece : r.retrieved_context) {
    for (auto& s : metrics::split_sentences(piece)) sentences.push_back(std::move(s));
  }
  if (sentences.empty()) return r;
  const auto vectors = providers::embed_batch(*embedder_, sentences);
  std::vector<std::size_t> order(sentences.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> sims(sentences.size());
  for (std::size_t i = 0; i < sims.size(); ++i) {
    sims[i] = metrics::cosine_similarity(qv, vectors[i]);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sims[a] > sims[b]; });
  order.resize(std::min(answer_sentences_, order.size()));
  std::sort(order.begin(), order.end());
  for (std::size_t i : order) {
    if (!r.answer.empty()) r.answer += ' ';
    r.answer += sentences[i];
  }
  return r;
}

HttpRagRunner::HttpRagRunner(std::shared_ptr<providers::Transport> transport,
                             providers::RetryPolicy retry)
    : transport_(std::move(transport)), retry_(retry) {}

RagResponse HttpRagRunner::run(const RagRequest& request) {
  const json body = request.to_json();
  return RagResponse::from_json(
      providers::with_retries(retry_, [&] { return transport_->post(body); }));
}

RagResponse CommandRagRunner::run(const RagRequest& request) {
  static std::atomic<unsigned> counter{0};
  const auto path = std::filesystem::temp_directory_path() /
                    ("ragval-req-" + std::to_string(::getpid()) + "-" +
                     std::to_string(counter.fetch_add(1)) + ".json");
  io::write_file(path, request.to_json().dump());
  const std::string cmd = "(" + command_ + ") < '" + path.string() + "'";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) {
    std::filesystem::remove(path);
    throw IoError("cannot start RAG command: " + command_);
  }
  std::string out;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) out.append(buf, n);
  const int status = ::pclose(pipe);
  std::error_code ec;
  std::filesystem::remove(path, ec);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw IoError("RAG command failed (status " + std::to_string(status) + "): " + command_);
  }
  json j;
  try {
    j = json::parse(out);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("RAG command printed invalid JSON: ") + e.what());
  }
  return RagResponse::from_json(j);
}

}  // namespace ragval::robustness
