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

#include "ragval/metrics/evaluate.h"

#include "ragval/common/error.h"
#include "ragval/common/text.h"
#include "ragval/corpus/corpus.h"

namespace ragval::metrics {

const std::vector<std::string>& functional_metric_names() {
  static const std::vector<std::string> names = {kContextRelevancy, kGroundednessSim,
                                                 kGroundednessNli,  kCompletenessSim,
                                                 kCompletenessW,    kAnswerRelevancy};
  return names;
}

std::vector<std::string> split_sentences(const std::string& t) {
  std::vector<std::string> out;
  for (const auto& s : corpus::segment_sentences(t)) {
    const auto trimmed = text::trim(s.text);
    if (!trimmed.empty()) out.emplace_back(trimmed);
  }
  return out;
}

std::map<std::string, MetricScore> score_functional(const std::string& query,
                                                    const std::vector<std::string>& context,
                                                    const std::string& answer,
                                                    providers::Embedder& embedder,
                                                    providers::NliProvider& nli,
                                                    const EvalSettings& settings) {
  auto q = split_sentences(query);
  auto a = split_sentences(answer);
  std::vector<std::string> c;
  for (const auto& piece : context) {
    for (auto& s : split_sentences(piece)) c.push_back(std::move(s));
  }
  if (q.empty()) throw InvalidArgument("evaluation: query has no sentence");
  if (c.empty()) throw InvalidArgument("evaluation: retrieved context has no sentence");
  if (a.empty()) throw InvalidArgument("evaluation: answer has no sentence");
  const auto qs = make_sentence_set(Role::kQuery, std::move(q), embedder);
  const auto cs = make_sentence_set(Role::kContext, std::move(c), embedder);
  const auto as = make_sentence_set(Role::kAnswer, std::move(a), embedder);
  const double t = settings.flag_threshold;
  std::map<std::string, MetricScore> out;
  out[kContextRelevancy] = context_relevancy(qs, cs, settings.context_relevancy, t);
  out[kGroundednessSim] = groundedness_sim(as, cs, t);
  out[kGroundednessNli] = groundedness_nli(as, cs, nli, t, settings.nli_premise_top_k);
  out[kCompletenessSim] = completeness_sim(cs, as, settings.completeness, t);
  MetricScore w;
  w.value = completeness_wasserstein(cs, as);
  w.notes.push_back("distance; lower is more complete");
  out[kCompletenessW] = std::move(w);
  out[kAnswerRelevancy] = answer_relevancy(as, qs, settings.answer_relevancy, t);
  return out;
}

}  // namespace ragval::metrics
