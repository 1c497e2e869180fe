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

#include <chrono>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

#include "ragval/providers/config.h"

namespace ragval::providers {

// JSON-over-POST seam between the HTTP provider clients and the network.
// Tests substitute an in-process fake.
class Transport {
 public:
  virtual ~Transport() = default;
  // Throws ProviderError on transport failure or non-2xx status.
  virtual nlohmann::json post(const nlohmann::json& body) = 0;
};

class HttpTransport : public Transport {
 public:
  // Reads the bearer token from config.api_key_env when set.
  explicit HttpTransport(const ProviderConfig& config);
  nlohmann::json post(const nlohmann::json& body) override;

 private:
  std::string base_;  // scheme://host[:port]
  std::string path_;
  std::chrono::milliseconds timeout_;
  std::string bearer_;
};

// Retries `fn` per policy with linear backoff; rethrows the last failure.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  for (int attempt = 0;; ++attempt) {
    try {
      return fn();
    } catch (const ProviderError&) {
      if (attempt >= policy.count) throw;
      std::this_thread::sleep_for(policy.backoff * (attempt + 1));
    }
  }
}

}  // namespace ragval::providers
