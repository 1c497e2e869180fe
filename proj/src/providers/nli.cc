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

#include "ragval/providers/nli.h"

#include <algorithm>
#include <cmath>

#include "ragval/simd/kernels.h"

namespace ragval::providers {

using nlohmann::json;

std::array<double, 3> nli_probabilities(double z) {
  // Shift by the max logit for stability.
  const double m = std::abs(z);
  const double e = std::exp(z - m);
  const double n = std::exp(-m);
  const double c = std::exp(-z - m);
  const double s = e + n + c;
  return {e / s, n / s, c / s};
}

MockNli::MockNli(std::shared_ptr<Embedder> embedder) : embedder_(std::move(embedder)) {}

NliJudgment MockNli::judge(const std::string& premise, const std::string& hypothesis) {
  const auto v = embed_batch(*embedder_, {premise, hypothesis});
  const double na = std::sqrt(simd::dot(v[0].values, v[0].values));
  const double nb = std::sqrt(simd::dot(v[1].values, v[1].values));
  const double cos = simd::dot(v[0].values, v[1].values) / (na * nb);
  NliJudgment j;
  j.entailment_logit = kGain * cos + kOffset;
  j.scale = kScale;
  j.probabilities = nli_probabilities(j.entailment_logit);
  return j;
}

HttpNli::HttpNli(ProviderConfig config, std::shared_ptr<Transport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  config_.validate();
}

NliJudgment HttpNli::judge(const std::string& premise, const std::string& hypothesis) {
  const json body = {{"model", config_.model_id},
                     {"premise", premise},
                     {"hypothesis", hypothesis}};
  const json resp = with_retries(config_.retry, [&] { return transport_->post(body); });
  NliJudgment j;
  if (resp.contains("entailment_logit")) {
    j.entailment_logit = resp.at("entailment_logit").get<double>();
    j.scale = resp.value("scale", 1.0);
    if (resp.contains("probabilities")) {
      const auto p = resp.at("probabilities").get<std::vector<double>>();
      if (p.size() != 3) throw ProviderError("nli: probabilities must have 3 entries");
      j.probabilities = {p[0], p[1], p[2]};
    } else {
      j.probabilities = nli_probabilities(j.entailment_logit);
    }
    return j;
  }
  if (resp.contains("probabilities")) {
    const auto p = resp.at("probabilities").get<std::vector<double>>();
    if (p.size() != 3) throw ProviderError("nli: probabilities must have 3 entries");
    const double pe = std::clamp(p[0], 1e-12, 1.0 - 1e-12);
    j.entailment_logit = std::log(pe / (1.0 - pe));
    j.scale = 1.0;
    j.probabilities = {p[0], p[1], p[2]};
    j.reconstructed = true;
    return j;
  }
  throw ProviderError("nli: response has neither entailment_logit nor probabilities");
}

NliJudgment nli_score(NliProvider& provider, const std::string& premise,
                      const std::string& hypothesis) {
  if (premise.empty() || hypothesis.empty()) {
    throw InvalidArgument("nli_score: premise and hypothesis must be non-empty");
  }
  NliJudgment j = provider.judge(premise, hypothesis);
  if (!(j.scale > 0.0) || !std::isfinite(j.scale)) {
    throw ProviderError("nli: scale must be a positive finite number");
  }
  if (!std::isfinite(j.entailment_logit)) throw ProviderError("nli: non-finite logit");
  const double sum = j.probabilities[0] + j.probabilities[1] + j.probabilities[2];
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ProviderError("nli: class probabilities sum to " + std::to_string(sum));
  }
  return j;
}

std::shared_ptr<NliProvider> make_nli(const ProviderConfig& config,
                                      std::shared_ptr<Embedder> embedder) {
  config.validate();
  if (config.is_mock()) return std::make_shared<MockNli>(std::move(embedder));
  return std::make_shared<HttpNli>(config, std::make_shared<HttpTransport>(config));
}

}  // namespace ragval::providers
