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

#include "ragval/pipeline/config.h"

#include <set>

#include "ragval/common/error.h"
#include "ragval/common/hash.h"
#include "ragval/common/io.h"

namespace ragval::pipeline {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were asked for so the rest
// can be reported as unknown.
class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidArgument(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    known_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidArgument(where(key) + ": " + e.what());
    }
  }

  // null and absent both leave `out` unset.
  template <typename T>
  void get(const char* key, std::optional<T>& out) {
    known_.insert(key);
    if (!j_.contains(key) || j_.at(key).is_null()) return;
    T value{};
    get(key, value);
    out = value;
  }

  void path(const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string raw;
    get(key, raw);
    if (!raw.empty()) out = resolve(raw, base);
  }

  void millis(const char* key, std::chrono::milliseconds& out) {
    long long v = out.count();
    get(key, v);
    if (v < 0) throw InvalidArgument(where(key) + ": must be >= 0");
    out = std::chrono::milliseconds(v);
  }

  const json* sub(const char* key) {
    known_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string where(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!known_.count(key)) throw InvalidArgument("unknown config key " + where(key));
    }
  }

  static std::filesystem::path resolve(const std::string& raw, const std::filesystem::path& base) {
    std::filesystem::path p(raw);
    return (p.is_absolute() ? p : base / p).lexically_normal();
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> known_;
};

void read_retry(const json& j, const std::string& where, providers::RetryPolicy& r) {
  Obj o(j, where);
  o.get("count", r.count);
  o.millis("backoff_ms", r.backoff);
  o.finish();
  if (r.count < 0) throw InvalidArgument(where + ".count: must be >= 0");
}

providers::ProviderConfig read_provider(const json* j, const std::string& where) {
  providers::ProviderConfig c;
  if (!j) return c;
  Obj o(*j, where);
  o.get("endpoint", c.endpoint);
  o.get("model_id", c.model_id);
  o.get("batch_size", c.batch_size);
  o.millis("timeout_ms", c.timeout);
  o.get("max_in_flight", c.max_in_flight);
  if (const json* r = o.sub("retry")) read_retry(*r, where + ".retry", c.retry);
  o.get("dimension", c.dimension);
  o.get("seed", c.seed);
  o.get("api_key_env", c.api_key_env);
  o.finish();
  try {
    c.validate();
  } catch (const Error& e) {
    throw InvalidArgument(where + ": " + e.what());
  }
  return c;
}

}  // namespace

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir,
                           const Overrides& overrides) {
  RunConfig c;
  c.source = j;
  Obj root(j, "config");

  std::vector<std::string> paths;
  if (const json* cj = root.sub("corpus")) {
    Obj o(*cj, "config.corpus");
    o.get("paths", paths);
    o.get("max_sentences", c.chunking.max_sentences);
    o.get("max_tokens", c.chunking.max_tokens);
    o.get("overlap", c.chunking.overlap);
    o.finish();
  }
  for (const auto& p : paths) c.corpus_paths.push_back(Obj::resolve(p, base_dir));

  if (const json* pj = root.sub("providers")) {
    Obj o(*pj, "config.providers");
    c.providers.embedding = read_provider(o.sub("embedding"), "config.providers.embedding");
    c.providers.nli = read_provider(o.sub("nli"), "config.providers.nli");
    c.providers.generator = read_provider(o.sub("generator"), "config.providers.generator");
    c.providers.classifier = read_provider(o.sub("classifier"), "config.providers.classifier");
    o.path("embedding_cache", c.providers.embedding_cache, base_dir);
    if (const json* rj = o.sub("rag")) {
      Obj r(*rj, "config.providers.rag");
      r.get("kind", c.providers.rag.kind);
      r.get("endpoint", c.providers.rag.endpoint);
      r.get("command", c.providers.rag.command);
      r.get("top_k", c.providers.rag.top_k);
      r.get("answer_sentences", c.providers.rag.answer_sentences);
      r.millis("timeout_ms", c.providers.rag.timeout);
      if (const json* rr = r.sub("retry")) {
        read_retry(*rr, "config.providers.rag.retry", c.providers.rag.retry);
      }
      r.finish();
    }
    o.finish();
  }

  if (const json* tj = root.sub("topics")) {
    Obj o(*tj, "config.topics");
    std::string method = "kmeans";
    o.get("reduced_dims", c.topics.reduced_dims);
    o.get("method", method);
    o.get("k", c.topics.k);
    o.get("eps", c.topics.eps);
    o.get("min_pts", c.topics.min_pts);
    o.get("keywords", c.topics.keywords);
    o.finish();
    if (method == "kmeans") {
      c.topics.method = topics::ClusterMethod::kKMeans;
    } else if (method == "dbscan") {
      c.topics.method = topics::ClusterMethod::kDbscan;
    } else {
      throw InvalidArgument("config.topics.method: expected kmeans or dbscan");
    }
  }

  std::vector<std::string> types;
  for (auto t : testgen::kAllQueryTypes) types.emplace_back(testgen::query_type_name(t));
  if (const json* sj = root.sub("sampling")) {
    Obj o(*sj, "config.sampling");
    std::string mode = "proportional";
    o.get("total_budget", c.sampling.spec.total_budget);
    o.get("mode", mode);
    o.get("weights", c.sampling.spec.weights);
    o.get("query_types", types);
    o.get("relevancy_threshold", c.sampling.relevancy_threshold);
    o.path("prompts_dir", c.sampling.prompts_dir, base_dir);
    o.finish();
    if (mode == "proportional") {
      c.sampling.spec.mode = testgen::SamplingMode::kProportional;
    } else if (mode == "weighted") {
      c.sampling.spec.mode = testgen::SamplingMode::kWeighted;
    } else {
      throw InvalidArgument("config.sampling.mode: expected proportional or weighted");
    }
  }
  for (const auto& t : types) c.sampling.query_types.push_back(testgen::parse_query_type(t));

  if (const json* mj = root.sub("metrics")) {
    Obj o(*mj, "config.metrics");
    std::string cr = "mean", comp = "mean", ar = "mean";
    o.get("context_relevancy", cr);
    o.get("completeness", comp);
    o.get("answer_relevancy", ar);
    o.get("flag_threshold", c.metrics.flag_threshold);
    o.get("nli_premise_top_k", c.metrics.nli_premise_top_k);
    o.finish();
    c.metrics.context_relevancy = metrics::parse_aggregation(cr);
    c.metrics.completeness = metrics::parse_aggregation(comp);
    c.metrics.answer_relevancy = metrics::parse_aggregation(ar);
  }

  if (const json* rj = root.sub("risk")) {
    Obj o(*rj, "config.risk");
    o.get("toxicity_threshold", c.risk.toxicity_threshold);
    o.path("lexicons_dir", c.risk.lexicons_dir, base_dir);
    o.path("privacy_rules", c.risk.privacy_rules, base_dir);
    o.path("gazetteer", c.risk.gazetteer, base_dir);
    if (const json* bj = o.sub("bias")) {
      Obj b(*bj, "config.risk.bias");
      b.get("templates", c.risk.bias.templates);
      b.get("tolerance", c.risk.bias.tolerance);
      if (const json* pj = b.sub("pairs")) {
        if (!pj->is_array()) throw InvalidArgument("config.risk.bias.pairs: expected an array");
        for (std::size_t i = 0; i < pj->size(); ++i) {
          Obj p((*pj)[i], "config.risk.bias.pairs[" + std::to_string(i) + "]");
          risk::SwapPair pair;
          std::string dim = "gender";
          p.get("original", pair.original);
          p.get("counterfactual", pair.counterfactual);
          p.get("dimension", dim);
          p.finish();
          pair.dimension = risk::parse_bias_dimension(dim);
          c.risk.bias.pairs.push_back(std::move(pair));
        }
      }
      b.finish();
    }
    o.finish();
  }

  c.calibration.metrics = {metrics::kContextRelevancy, metrics::kGroundednessSim,
                           metrics::kAnswerRelevancy};
  if (const json* cj = root.sub("calibration")) {
    Obj o(*cj, "config.calibration");
    std::string method = "platt";
    o.get("method", method);
    o.get("alpha", c.calibration.alpha);
    o.get("test_fraction", c.calibration.test_fraction);
    o.get("stage1_fraction", c.calibration.stage1_fraction);
    o.path("labels", c.calibration.labels, base_dir);
    o.get("positive_min", c.calibration.positive_min);
    o.get("simulated_labels", c.calibration.simulated_labels);
    o.get("decision_threshold", c.calibration.decision_threshold);
    o.get("metrics", c.calibration.metrics);
    o.finish();
    c.calibration.method = calibration::parse_stage1_method(method);
  }

  std::vector<std::string> kinds = {"typo", "colloquial", "adversarial_distractor"};
  if (const json* rj = root.sub("robustness")) {
    Obj o(*rj, "config.robustness");
    o.get("kinds", kinds);
    o.get("typo_rate", c.robustness.typo_rate);
    o.get("colloquial_rate", c.robustness.colloquial_rate);
    o.get("distractor_position", c.robustness.distractor_position);
    o.get("worst_k", c.robustness.worst_k);
    o.path("ood_pool", c.robustness.ood_pool, base_dir);
    o.get("ood_count", c.robustness.ood_count);
    o.get("ood_ceiling", c.robustness.ood_ceiling);
    o.finish();
  }
  for (const auto& k : kinds) c.robustness.kinds.push_back(robustness::parse_perturbation_kind(k));

  c.report.metrics = metrics::functional_metric_names();
  if (const json* rj = root.sub("report")) {
    Obj o(*rj, "config.report");
    o.get("dim1", c.report.dim1);
    o.get("dim2", c.report.dim2);
    o.get("metrics", c.report.metrics);
    o.finish();
  }

  if (const json* gj = root.sub("gates")) {
    Obj o(*gj, "config.gates");
    o.get("min_mean", c.gates.min_mean);
    o.get("max_toxicity_failures", c.gates.max_toxicity_failures);
    o.get("max_pii_findings", c.gates.max_pii_findings);
    o.get("max_bias_flags", c.gates.max_bias_flags);
    o.get("min_coverage", c.gates.min_coverage);
    o.finish();
  }

  root.path("output_dir", c.output_dir, base_dir);
  root.get("seed", c.seed);
  root.finish();
  if (overrides.seed) c.seed = *overrides.seed;
  if (!overrides.output_dir.empty()) c.output_dir = overrides.output_dir.lexically_normal();
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (corpus_paths.empty()) throw InvalidArgument("config.corpus.paths: at least one path");
  chunking.validate();
  sampling.spec.validate();
  if (sampling.query_types.empty()) throw InvalidArgument("config.sampling.query_types: empty");
  if (!(sampling.relevancy_threshold >= -1.0 && sampling.relevancy_threshold <= 1.0)) {
    throw InvalidArgument("config.sampling.relevancy_threshold: outside [-1, 1]");
  }
  if (metrics.completeness == metrics::Aggregation::kMinimax ||
      metrics.completeness == metrics::Aggregation::kWeighted) {
    throw InvalidArgument("config.metrics.completeness: only mean is available without weights");
  }
  if (metrics.context_relevancy == metrics::Aggregation::kWeighted ||
      metrics.answer_relevancy == metrics::Aggregation::kWeighted) {
    throw InvalidArgument("config.metrics: weighted aggregation needs per-sentence weights");
  }
  if (!(risk.toxicity_threshold >= 0.0 && risk.toxicity_threshold <= 1.0)) {
    throw InvalidArgument("config.risk.toxicity_threshold: outside [0, 1]");
  }
  if (!(risk.bias.tolerance >= 0.0)) throw InvalidArgument("config.risk.bias.tolerance: < 0");
  if (!risk.bias.templates.empty() && risk.bias.pairs.empty()) {
    throw InvalidArgument("config.risk.bias: templates given without pairs");
  }
  if (!(calibration.alpha > 0.0 && calibration.alpha < 1.0)) {
    throw InvalidArgument("config.calibration.alpha: must lie in (0, 1)");
  }
  for (double f : {calibration.test_fraction, calibration.stage1_fraction}) {
    if (!(f > 0.0 && f < 1.0)) {
      throw InvalidArgument("config.calibration: fractions must lie in (0, 1)");
    }
  }
  if (calibration.labels.empty() && !calibration.simulated_labels) {
    throw InvalidArgument(
        "config.calibration: give a labels CSV or set simulated_labels to true");
  }
  for (double r : {robustness.typo_rate, robustness.colloquial_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidArgument("config.robustness: rates lie in [0, 1]");
  }
  if (robustness.ood_count > 0 && robustness.ood_pool.empty()) {
    throw InvalidArgument("config.robustness: ood_count > 0 needs ood_pool");
  }
  const auto& rag = providers.rag;
  if (rag.kind != "mock" && rag.kind != "http" && rag.kind != "command") {
    throw InvalidArgument("config.providers.rag.kind: expected mock, http or command");
  }
  if (rag.kind == "http" && rag.endpoint.empty()) {
    throw InvalidArgument("config.providers.rag.endpoint: required for http");
  }
  if (rag.kind == "command" && rag.command.empty()) {
    throw InvalidArgument("config.providers.rag.command: required for command");
  }
  if (report.dim1 == report.dim2) throw InvalidArgument("config.report: dim1 equals dim2");
  if (output_dir.empty()) throw InvalidArgument("config.output_dir: required (or pass --out)");
}

json RunConfig::canonical_json() const {
  json j = source;
  j.erase("output_dir");
  j["seed"] = seed;
  return j;
}

std::string RunConfig::hash() const { return sha256_hex(canonical_json().dump()); }

RunConfig load_run_config(const std::filesystem::path& file, const Overrides& overrides) {
  json j;
  try {
    j = json::parse(io::read_file(file));
  } catch (const json::parse_error& e) {
    throw InvalidArgument("config " + file.string() + ": " + e.what());
  }
  return parse_run_config(j, file.parent_path(), overrides);
}

}  // namespace ragval::pipeline
