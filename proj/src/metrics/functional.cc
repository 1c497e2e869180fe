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

#include "ragval/metrics/functional.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ragval/common/error.h"
#include "ragval/simd/kernels.h"

namespace ragval::metrics {

using nlohmann::json;

namespace {

void check_roles(const SentenceSet& source, Role want_source, const SentenceSet& target,
                 Role want_target, std::string_view metric) {
  if (source.role != want_source || target.role != want_target) {
    throw InvalidArgument(std::string(metric) + ": expected " +
                          std::string(role_name(want_source)) + " -> " +
                          std::string(role_name(want_target)) + ", got " +
                          std::string(role_name(source.role)) + " -> " +
                          std::string(role_name(target.role)));
  }
}

std::vector<double> norms(const SentenceSet& s) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& v = s.embeddings[i].values;
    out[i] = std::sqrt(simd::dot(v, v));
    if (!(out[i] > 0.0)) {
      throw DegenerateInput(std::string(role_name(s.role)) + " sentence " +
                            std::to_string(i) + " has a zero-norm embedding");
    }
  }
  return out;
}

std::size_t argmin(const Profile& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i].value < p[best].value) best = i;
  }
  return best;
}

MetricScore finish(Profile profile, Aggregation kind, std::span<const double> weights,
                   double flag_threshold) {
  MetricScore score;
  score.value = aggregate(profile, kind, weights);
  score.aggregation = kind;
  for (const auto& m : profile) {
    if (m.value < flag_threshold) score.flagged.push_back(m.index);
  }
  score.least = profile[argmin(profile)].index;
  score.per_sentence = std::move(profile);
  return score;
}

std::span<const double> weights_for(const SentenceSet& source, Aggregation kind) {
  if (kind != Aggregation::kWeighted) return {};
  if (source.weights.empty()) {
    throw InvalidArgument("weighted aggregation needs weights on the " +
                          std::string(role_name(source.role)) + " set");
  }
  return source.weights;
}

}  // namespace

std::string_view role_name(Role role) {
  switch (role) {
    case Role::kQuery:
      return "query";
    case Role::kContext:
      return "context";
    case Role::kAnswer:
      return "answer";
  }
  return "?";
}

std::string_view aggregation_name(Aggregation kind) {
  switch (kind) {
    case Aggregation::kMean:
      return "mean";
    case Aggregation::kWeighted:
      return "weighted";
    case Aggregation::kMinimax:
      return "minimax";
  }
  return "?";
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "mean") return Aggregation::kMean;
  if (name == "weighted") return Aggregation::kWeighted;
  if (name == "minimax") return Aggregation::kMinimax;
  throw InvalidArgument("unknown aggregation \"" + std::string(name) + "\"");
}

void SentenceSet::validate() const {
  const std::string who(role_name(role));
  if (embeddings.empty()) throw InvalidArgument(who + " set is empty");
  if (!texts.empty() && texts.size() != embeddings.size()) {
    throw InvalidArgument(who + " set: texts and embeddings differ in length");
  }
  const auto& model = embeddings.front().model_id;
  const std::size_t dim = embeddings.front().values.size();
  for (const auto& e : embeddings) {
    if (e.model_id != model) {
      throw InvalidArgument(who + " set mixes embedding models " + model + " and " +
                            e.model_id);
    }
    if (e.values.size() != dim) throw InvalidArgument(who + " set mixes dimensions");
  }
  if (!weights.empty()) {
    if (weights.size() != embeddings.size()) {
      throw InvalidArgument(who + " set: weight count != sentence count");
    }
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) {
        throw InvalidArgument(who + " set: weights must be finite and >= 0");
      }
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw InvalidArgument(who + " set: weights sum to " + std::to_string(sum) +
                            ", not 1");
    }
  }
}

SentenceSet make_sentence_set(Role role, std::vector<std::string> sentences,
                              providers::Embedder& embedder, std::vector<double> weights) {
  SentenceSet s;
  s.role = role;
  s.embeddings = providers::embed_batch(embedder, sentences);
  s.texts = std::move(sentences);
  s.weights = std::move(weights);
  s.validate();
  return s;
}

json to_json(const MetricScore& score) {
  json per = json::array();
  for (const auto& m : score.per_sentence) {
    json row = {{"index", m.index}, {"value", m.value}};
    row["match"] = m.match == kNoMatch ? json(nullptr) : json(m.match);
    per.push_back(std::move(row));
  }
  json j = {{"value", score.value},
            {"aggregation", aggregation_name(score.aggregation)},
            {"per_sentence", std::move(per)},
            {"flagged", score.flagged}};
  j["least"] = score.least == kNoMatch ? json(nullptr) : json(score.least);
  if (!score.notes.empty()) j["notes"] = score.notes;
  return j;
}

MetricScore metric_score_from_json(const json& j) {
  MetricScore s;
  s.value = j.at("value").get<double>();
  s.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
  for (const auto& row : j.at("per_sentence")) {
    SentenceMatch m;
    m.index = row.at("index").get<std::size_t>();
    m.value = row.at("value").get<double>();
    m.match = row.at("match").is_null() ? kNoMatch : row.at("match").get<std::size_t>();
    s.per_sentence.push_back(m);
  }
  s.flagged = j.at("flagged").get<std::vector<std::size_t>>();
  s.least = j.at("least").is_null() ? kNoMatch : j.at("least").get<std::size_t>();
  if (j.contains("notes")) s.notes = j.at("notes").get<std::vector<std::string>>();
  return s;
}

double cosine_similarity(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.model_id != v.model_id) {
    throw InvalidArgument("cosine_similarity: model ids differ (" + u.model_id + " vs " +
                          v.model_id + ")");
  }
  if (u.values.size() != v.values.size()) {
    throw InvalidArgument("cosine_similarity: dimensions differ");
  }
  const double nu = std::sqrt(simd::dot(u.values, u.values));
  const double nv = std::sqrt(simd::dot(v.values, v.values));
  if (!(nu > 0.0) || !(nv > 0.0)) {
    throw DegenerateInput("cosine_similarity: zero-norm vector has no angle");
  }
  return std::clamp(simd::dot(u.values, v.values) / (nu * nv), -1.0, 1.0);
}

std::vector<double> similarity_matrix(const SentenceSet& source, const SentenceSet& target) {
  source.validate();
  target.validate();
  if (source.embeddings.front().model_id != target.embeddings.front().model_id) {
    throw InvalidArgument("cannot compare embeddings from different models");
  }
  if (source.embeddings.front().values.size() != target.embeddings.front().values.size()) {
    throw InvalidArgument("source and target embedding dimensions differ");
  }
  const auto ns = norms(source);
  const auto nt = norms(target);
  const std::size_t m = target.size();
  std::vector<double> sims(source.size() * m);
  for (std::size_t i = 0; i < source.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = simd::dot(source.embeddings[i].values, target.embeddings[j].values);
      sims[i * m + j] = std::clamp(d / (ns[i] * nt[j]), -1.0, 1.0);
    }
  }
  return sims;
}

Profile max_sim_profile(const SentenceSet& source, const SentenceSet& target) {
  if (target.embeddings.empty()) {
    throw InvalidArgument("max_sim_profile: " + std::string(role_name(target.role)) +
                          " target has no sentences to match");
  }
  const auto sims = similarity_matrix(source, target);
  const std::size_t m = target.size();
  Profile profile(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < m; ++j) {
      if (sims[i * m + j] > sims[i * m + best]) best = j;
    }
    profile[i] = SentenceMatch{i, sims[i * m + best], best};
  }
  return profile;
}

double aggregate(const Profile& profile, Aggregation kind, std::span<const double> weights) {
  if (profile.empty()) throw InvalidArgument("aggregate: empty profile");
  if (kind != Aggregation::kWeighted && !weights.empty()) {
    throw InvalidArgument("aggregate: weights given for non-weighted aggregation");
  }
  switch (kind) {
    case Aggregation::kMean: {
      double s = 0.0;
      for (const auto& m : profile) s += m.value;
      return s / static_cast<double>(profile.size());
    }
    case Aggregation::kWeighted: {
      if (weights.size() != profile.size()) {
        throw InvalidArgument("aggregate: " + std::to_string(weights.size()) +
                              " weights for " + std::to_string(profile.size()) +
                              " sentences");
      }
      double sum = 0.0;
      double s = 0.0;
      for (std::size_t i = 0; i < profile.size(); ++i) {
        if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
          throw InvalidArgument("aggregate: weights must be finite and >= 0");
        }
        sum += weights[i];
        s += weights[i] * profile[i].value;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("aggregate: weights must sum to 1");
      return s;
    }
    case Aggregation::kMinimax: {
      double lo = profile.front().value;
      for (const auto& m : profile) lo = std::min(lo, m.value);
      return lo;
    }
  }
  throw InvalidArgument("aggregate: unknown kind");
}

double logistic(double d) {
  if (d >= 0.0) return 1.0 / (1.0 + std::exp(-d));
  const double e = std::exp(d);
  return e / (1.0 + e);
}

MetricScore context_relevancy(const SentenceSet& query, const SentenceSet& context,
                              Aggregation kind, double flag_threshold) {
  check_roles(query, Role::kQuery, context, Role::kContext, "context_relevancy");
  return finish(max_sim_profile(query, context), kind, weights_for(query, kind),
                flag_threshold);
}

MetricScore groundedness_sim(const SentenceSet& answer, const SentenceSet& context,
                             double flag_threshold) {
  check_roles(answer, Role::kAnswer, context, Role::kContext, "groundedness_sim");
  return finish(max_sim_profile(answer, context), Aggregation::kMean, {}, flag_threshold);
}

MetricScore groundedness_nli(const SentenceSet& answer, const SentenceSet& context,
                             providers::NliProvider& nli, double flag_threshold,
                             std::size_t premise_top_k) {
  check_roles(answer, Role::kAnswer, context, Role::kContext, "groundedness_nli");
  if (answer.texts.size() != answer.size() || context.texts.size() != context.size()) {
    throw InvalidArgument("groundedness_nli: sentence texts are required");
  }
  if (premise_top_k < 1) throw InvalidArgument("groundedness_nli: premise_top_k must be >= 1");
  const auto sims = similarity_matrix(answer, context);
  const std::size_t n = context.size();
  const std::size_t keep = std::min(premise_top_k, n);
  Profile profile(answer.size());
  for (std::size_t i = 0; i < answer.size(); ++i) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sims[i * n + a] > sims[i * n + b];
    });
    order.resize(keep);
    std::sort(order.begin(), order.end());
    std::string premise;
    for (std::size_t j : order) {
      if (!premise.empty()) premise.push_back(' ');
      premise += context.texts[j];
    }
    providers::NliJudgment judgment;
    try {
      judgment = providers::nli_score(nli, premise, answer.texts[i]);
    } catch (const providers::ProviderError& e) {
      throw providers::ProviderError(
          "groundedness_nli: answer sentence " + std::to_string(i) + ": " + e.what(), {i});
    }
    const double distance = judgment.entailment_logit / judgment.scale;
    profile[i] = SentenceMatch{i, logistic(distance), kNoMatch};
  }
  MetricScore score = finish(std::move(profile), Aggregation::kMean, {}, flag_threshold);
  if (keep < n) {
    score.notes.push_back("premise truncated to top " + std::to_string(keep) + " of " +
                          std::to_string(n) + " context sentences per answer sentence");
  }
  return score;
}

MetricScore completeness_sim(const SentenceSet& context, const SentenceSet& answer,
                             Aggregation kind, double flag_threshold) {
  check_roles(context, Role::kContext, answer, Role::kAnswer, "completeness_sim");
  if (kind == Aggregation::kMinimax) {
    throw InvalidArgument("completeness_sim: aggregation must be mean or weighted");
  }
  return finish(max_sim_profile(context, answer), kind, weights_for(context, kind),
                flag_threshold);
}

double completeness_wasserstein(const SentenceSet& context, const SentenceSet& answer) {
  check_roles(context, Role::kContext, answer, Role::kAnswer, "completeness_wasserstein");
  const auto sims = similarity_matrix(context, answer);
  double total = 0.0;
  for (double s : sims) total += 1.0 - s;
  return total / static_cast<double>(sims.size());
}

MetricScore answer_relevancy(const SentenceSet& answer, const SentenceSet& query,
                             Aggregation kind, double flag_threshold) {
  check_roles(answer, Role::kAnswer, query, Role::kQuery, "answer_relevancy");
  return finish(max_sim_profile(answer, query), kind, weights_for(answer, kind),
                flag_threshold);
}

}  // namespace ragval::metrics
