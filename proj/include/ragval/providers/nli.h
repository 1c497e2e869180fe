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

#include <array>
#include <memory>
#include <string>

#include "ragval/providers/config.h"
#include "ragval/providers/embedding.h"
#include "ragval/providers/transport.h"

namespace ragval::providers {

// Entailment-side logit z, the classifier weight norm ||w|| (so the signed
// distance to the decision boundary is z / scale), and class probabilities
// ordered {entailment, neutral, contradiction}.
struct NliJudgment {
  double entailment_logit = 0.0;
  double scale = 1.0;
  std::array<double, 3> probabilities{};
  // Set when z was reconstructed from probabilities (scale forced to 1).
  bool reconstructed = false;
};

class NliProvider {
 public:
  virtual ~NliProvider() = default;
  virtual NliJudgment judge(const std::string& premise, const std::string& hypothesis) = 0;
};

// z = kGain * cos(premise, hypothesis) + kOffset under the given embedder,
// with a fixed scale. Increasing in similarity; z < 0 for orthogonal pairs.
class MockNli : public NliProvider {
 public:
  static constexpr double kGain = 8.0;
  static constexpr double kOffset = -3.0;
  static constexpr double kScale = 2.0;

  explicit MockNli(std::shared_ptr<Embedder> embedder);
  NliJudgment judge(const std::string& premise, const std::string& hypothesis) override;

 private:
  std::shared_ptr<Embedder> embedder_;
};

// Request {"model", "premise", "hypothesis"}. Response either
// {"entailment_logit", "scale"} or {"probabilities": [p_e, p_n, p_c]}; the
// latter is mapped to z = log(p_e / (1 - p_e)), scale = 1.
class HttpNli : public NliProvider {
 public:
  HttpNli(ProviderConfig config, std::shared_ptr<Transport> transport);
  NliJudgment judge(const std::string& premise, const std::string& hypothesis) override;

 private:
  ProviderConfig config_;
  std::shared_ptr<Transport> transport_;
};

// Softmax over logits (z, 0, -z).
std::array<double, 3> nli_probabilities(double entailment_logit);

// Checked entry point: both strings non-empty, scale > 0, probabilities sum
// to 1 within 1e-9.
NliJudgment nli_score(NliProvider& provider, const std::string& premise,
                      const std::string& hypothesis);

std::shared_ptr<NliProvider> make_nli(const ProviderConfig& config,
                                      std::shared_ptr<Embedder> embedder);

}  // namespace ragval::providers
