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
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ragval/common/error.h"

namespace ragval::providers {

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;
};

struct RetryPolicy {
  int count = 2;
  std::chrono::milliseconds backoff{200};
};

// Connection settings shared by every provider kind. `endpoint` is either the
// literal "mock" or an http(s) URL including the request path.
struct ProviderConfig {
  std::string endpoint = "mock";
  std::string model_id = "mock";
  std::size_t batch_size = 32;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_in_flight = 4;
  RetryPolicy retry;
  // Declared embedding dimension; responses of any other length are rejected.
  std::size_t dimension = 64;
  std::uint64_t seed = 0;
  // Name of the environment variable holding a bearer token, if any.
  std::string api_key_env;

  bool is_mock() const { return endpoint == "mock"; }
  void validate() const;
};

// A provider call failed after retries. `indices` are the positions (in the
// caller's input list) of the inputs that were in flight.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, std::vector<std::size_t> indices = {})
      : Error(what), indices_(std::move(indices)) {}
  const std::vector<std::size_t>& indices() const { return indices_; }

 private:
  std::vector<std::size_t> indices_;
};

}  // namespace ragval::providers
