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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "ragval/providers/transport.h"

#include <cstdlib>

#include <httplib.h>

namespace ragval::providers {

void ProviderConfig::validate() const {
  if (batch_size < 1) throw InvalidArgument("provider: batch_size must be >= 1");
  if (timeout.count() <= 0) throw InvalidArgument("provider: timeout must be > 0");
  if (max_in_flight < 1) throw InvalidArgument("provider: max_in_flight must be >= 1");
  if (retry.count < 0) throw InvalidArgument("provider: retry count must be >= 0");
  if (dimension < 1) throw InvalidArgument("provider: dimension must be >= 1");
  if (!is_mock() && endpoint.rfind("http://", 0) != 0 &&
      endpoint.rfind("https://", 0) != 0) {
    throw InvalidArgument("provider: endpoint must be \"mock\" or an http(s) URL: " +
                          endpoint);
  }
}

HttpTransport::HttpTransport(const ProviderConfig& config) : timeout_(config.timeout) {
  const auto scheme_end = config.endpoint.find("://");
  if (scheme_end == std::string::npos) {
    throw InvalidArgument("not an http(s) URL: " + config.endpoint);
  }
  const auto path_start = config.endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    base_ = config.endpoint;
    path_ = "/";
  } else {
    base_ = config.endpoint.substr(0, path_start);
    path_ = config.endpoint.substr(path_start);
  }
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str())) bearer_ = key;
  }
}

nlohmann::json HttpTransport::post(const nlohmann::json& body) {
  httplib::Client client(base_);
  const auto secs = timeout_.count() / 1000;
  const auto usecs = (timeout_.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!bearer_.empty()) headers.emplace("Authorization", "Bearer " + bearer_);
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw ProviderError("POST " + base_ + path_ + " failed: " +
                        httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw ProviderError("POST " + base_ + path_ + " returned HTTP " +
                        std::to_string(res->status));
  }
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProviderError("POST " + base_ + path_ + ": invalid JSON response: " + e.what());
  }
}

}  // namespace ragval::providers
