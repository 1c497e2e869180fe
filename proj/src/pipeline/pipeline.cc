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

#include "ragval/pipeline/pipeline.h"

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <ctime>
#include <memory>
#include <set>

#include "ragval/calibration/calibration.h"
#include "ragval/common/error.h"
#include "ragval/common/hash.h"
#include "ragval/common/io.h"
#include "ragval/common/random.h"
#include "ragval/common/stats.h"
#include "ragval/common/text.h"
#include "ragval/corpus/corpus.h"
#include "ragval/metrics/evaluate.h"
#include "ragval/metrics/risk.h"
#include "ragval/providers/classifier.h"
#include "ragval/providers/embedding.h"
#include "ragval/providers/generator.h"
#include "ragval/providers/nli.h"
#include "ragval/robustness/robustness.h"
#include "ragval/robustness/runner.h"
#include "ragval/testgen/testgen.h"
#include "ragval/topics/strata.h"
#include "ragval/weakness/weakness.h"

namespace ragval::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_json(const fs::path& path, const json& j) { io::write_file(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

// Regular files under `paths` (directories walked recursively), sorted.
std::vector<fs::path> expand_files(const std::vector<fs::path>& paths) {
  std::vector<fs::path> out;
  for (const auto& p : paths) {
    std::error_code ec;
    if (fs::is_directory(p, ec)) {
      for (const auto& e : fs::recursive_directory_iterator(p, ec)) {
        if (e.is_regular_file()) out.push_back(e.path());
      }
    } else if (fs::exists(p, ec)) {
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string stage_hint(std::string_view stage) {
  return "run `ragval " + std::string(stage) + "` first";
}

}  // namespace

std::size_t stage_index(std::string_view stage) {
  for (std::size_t i = 0; i < kStages.size(); ++i) {
    if (kStages[i] == stage) return i;
  }
  throw InvalidArgument("unknown stage \"" + std::string(stage) + "\"");
}

json Manifest::to_json() const {
  json artifacts = json::array();
  for (auto name : kStages) {
    const auto it = stages.find(std::string(name));
    if (it == stages.end()) continue;
    const StageEntry& e = it->second;
    json files = json::array();
    for (const auto& f : e.files) {
      files.push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    }
    artifacts.push_back({{"stage", e.stage},
                         {"inputs_hash", e.inputs_hash},
                         {"stage_seed", e.stage_seed},
                         {"files", std::move(files)},
                         {"completed_at", e.completed_at}});
  }
  return {{"run_id", run_id},
          {"config_hash", config_hash},
          {"tool_version", tool_version},
          {"seed", seed},
          {"created_at", created_at},
          {"updated_at", updated_at},
          {"artifacts", std::move(artifacts)}};
}

Manifest Manifest::from_json(const json& j) {
  Manifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.tool_version = j.value("tool_version", "");
  m.seed = j.value("seed", std::uint64_t{0});
  m.created_at = j.value("created_at", "");
  m.updated_at = j.value("updated_at", "");
  for (const auto& a : j.at("artifacts")) {
    StageEntry e;
    e.stage = a.at("stage").get<std::string>();
    e.inputs_hash = a.at("inputs_hash").get<std::string>();
    e.stage_seed = a.value("stage_seed", std::uint64_t{0});
    e.completed_at = a.value("completed_at", "");
    for (const auto& f : a.at("files")) {
      e.files.push_back({f.at("path").get<std::string>(), f.at("sha256").get<std::string>(),
                         f.at("bytes").get<std::uintmax_t>()});
    }
    m.stages[e.stage] = std::move(e);
  }
  return m;
}

RunLock::RunLock(const fs::path& dir) : path_(dir / ".lock") {
  fs::create_directories(dir);
  for (int attempt = 0; attempt < 2; ++attempt) {
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd >= 0) {
      const std::string pid = std::to_string(::getpid()) + "\n";
      [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
      ::close(fd);
      return;
    }
    if (errno != EEXIST) throw IoError("cannot create lock file " + path_.string());
    long owner = 0;
    try {
      owner = std::stol(io::read_file(path_));
    } catch (const std::exception&) {
      owner = 0;
    }
    const bool alive = owner > 0 && (::kill(static_cast<pid_t>(owner), 0) == 0 || errno == EPERM);
    if (alive) {
      throw Error("run directory " + dir.string() + " is locked by process " +
                  std::to_string(owner));
    }
    std::error_code ec;
    fs::remove(path_, ec);  // stale lock
  }
  throw Error("cannot acquire lock " + path_.string());
}

RunLock::~RunLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

RunStore::RunStore(const RunConfig& config) : dir_(config.output_dir) {
  fs::create_directories(dir_);
  const fs::path mpath = dir_ / "manifest.json";
  const std::string hash = config.hash();
  if (fs::exists(mpath)) {
    manifest_ = Manifest::from_json(read_json(mpath));
    if (manifest_.config_hash != hash) {
      throw InvalidArgument("run directory " + dir_.string() +
                            " belongs to a different config (hash " +
                            manifest_.config_hash.substr(0, 12) + ", this config " +
                            hash.substr(0, 12) + "); choose another output directory");
    }
  } else {
    manifest_.config_hash = hash;
    manifest_.run_id = "run-" + hash.substr(0, 12);
    manifest_.seed = config.seed;
    manifest_.created_at = utc_now();
    manifest_.updated_at = manifest_.created_at;
    save();
  }
}

bool RunStore::intact(std::string_view stage) const {
  const auto it = manifest_.stages.find(std::string(stage));
  if (it == manifest_.stages.end()) return false;
  for (const auto& f : it->second.files) {
    std::error_code ec;
    const fs::path p = dir_ / f.path;
    if (!fs::is_regular_file(p, ec)) return false;
    if (fs::file_size(p, ec) != f.bytes || sha256_file(p) != f.sha256) return false;
  }
  return true;
}

void RunStore::require_predecessor(std::string_view stage) const {
  const std::size_t i = stage_index(stage);
  if (i == 0) return;
  const std::string_view pred = kStages[i - 1];
  if (!intact(pred)) {
    throw Error("stage " + std::string(stage) + " needs the artifacts of stage " +
                std::string(pred) + " (missing or modified); " + stage_hint(pred));
  }
}

bool RunStore::up_to_date(std::string_view stage, const std::string& inputs_hash) const {
  const auto it = manifest_.stages.find(std::string(stage));
  return it != manifest_.stages.end() && it->second.inputs_hash == inputs_hash && intact(stage);
}

std::string RunStore::inputs_hash(std::string_view stage,
                                  const std::vector<fs::path>& external) const {
  std::string key = manifest_.config_hash + "|" + std::string(stage) + "|" + kToolVersion;
  const std::size_t i = stage_index(stage);
  if (i > 0) {
    const auto it = manifest_.stages.find(std::string(kStages[i - 1]));
    if (it != manifest_.stages.end()) {
      for (const auto& f : it->second.files) key += "|" + f.path + "=" + f.sha256;
    }
  }
  for (const auto& p : expand_files(external)) {
    key += "|" + p.filename().string() + "=" + sha256_file(p);
  }
  return sha256_hex(key);
}

void RunStore::record(std::string_view stage, const std::string& inputs_hash,
                      std::uint64_t stage_seed, const std::vector<std::string>& relative_files) {
  StageEntry e;
  e.stage = std::string(stage);
  e.inputs_hash = inputs_hash;
  e.stage_seed = stage_seed;
  e.completed_at = utc_now();
  for (const auto& rel : relative_files) {
    const fs::path p = dir_ / rel;
    e.files.push_back({rel, sha256_file(p), fs::file_size(p)});
  }
  manifest_.stages[e.stage] = std::move(e);
  manifest_.updated_at = utc_now();
  save();
}

void RunStore::save() { write_json(dir_ / "manifest.json", manifest_.to_json()); }

namespace {

// Providers shared by the stages of one invocation.
class Context {
 public:
  Context(const RunConfig& config, RunStore& store) : config_(config), store_(store) {}

  const RunConfig& config() const { return config_; }
  RunStore& store() { return store_; }

  providers::Embedder& embedder() {
    if (!embedder_) {
      auto cache = config_.providers.embedding_cache.empty()
                       ? std::make_shared<providers::EmbeddingCache>()
                       : std::make_shared<providers::EmbeddingCache>(
                             config_.providers.embedding_cache);
      embedder_ = providers::make_embedder(config_.providers.embedding, cache);
    }
    return *embedder_;
  }
  std::shared_ptr<providers::Embedder> embedder_ptr() {
    embedder();
    return embedder_;
  }
  providers::NliProvider& nli() {
    if (!nli_) nli_ = providers::make_nli(config_.providers.nli, embedder_ptr());
    return *nli_;
  }
  providers::Generator& generator() {
    if (!generator_) generator_ = providers::make_generator(config_.providers.generator);
    return *generator_;
  }
  providers::Classifier& classifier() {
    if (!classifier_) {
      auto lex = config_.risk.lexicons_dir.empty()
                     ? providers::Lexicons::defaults()
                     : providers::Lexicons::load(config_.risk.lexicons_dir);
      classifier_ = providers::make_classifier(config_.providers.classifier, std::move(lex));
    }
    return *classifier_;
  }
  const corpus::Corpus& corpus() {
    if (!corpus_) {
      corpus_ = std::make_unique<corpus::Corpus>(
          corpus::Corpus::from_jsonl(io::read_file(store_.path("corpus.jsonl"))));
    }
    return *corpus_;
  }
  robustness::RagRunner& runner() {
    if (!runner_) {
      const auto& r = config_.providers.rag;
      if (r.kind == "mock") {
        runner_ = std::make_unique<robustness::MockRagRunner>(corpus(), embedder_ptr(), r.top_k,
                                                              r.answer_sentences);
      } else if (r.kind == "http") {
        providers::ProviderConfig pc;
        pc.endpoint = r.endpoint;
        pc.timeout = r.timeout;
        pc.retry = r.retry;
        runner_ = std::make_unique<robustness::HttpRagRunner>(
            std::make_shared<providers::HttpTransport>(pc), r.retry);
      } else {
        runner_ = std::make_unique<robustness::CommandRagRunner>(r.command);
      }
    }
    return *runner_;
  }
  risk::PrivacyScanner& scanner() {
    if (!scanner_) {
      const auto& rk = config_.risk;
      auto rules = rk.privacy_rules.empty()
                       ? risk::PrivacyScanner::parse_rules(risk::default_pii_rules_text())
                       : risk::PrivacyScanner::parse_rules(io::read_file(rk.privacy_rules));
      std::vector<std::string> names;
      {
        const std::string body = rk.gazetteer.empty()
                                     ? std::string(risk::default_gazetteer_text())
                                     : io::read_file(rk.gazetteer);
        std::size_t pos = 0;
        while (pos <= body.size()) {
          std::size_t nl = body.find('\n', pos);
          if (nl == std::string::npos) nl = body.size();
          const auto line = text::trim(std::string_view(body).substr(pos, nl - pos));
          pos = nl + 1;
          if (!line.empty() && line.front() != '#') names.emplace_back(line);
        }
      }
      scanner_ = std::make_unique<risk::PrivacyScanner>(std::move(rules), std::move(names));
    }
    return *scanner_;
  }

 private:
  const RunConfig& config_;
  RunStore& store_;
  std::shared_ptr<providers::Embedder> embedder_;
  std::shared_ptr<providers::NliProvider> nli_;
  std::shared_ptr<providers::Generator> generator_;
  std::shared_ptr<providers::Classifier> classifier_;
  std::unique_ptr<corpus::Corpus> corpus_;
  std::unique_ptr<robustness::RagRunner> runner_;
  std::unique_ptr<risk::PrivacyScanner> scanner_;
};

std::vector<testgen::TestQuery> load_queries(Context& ctx) {
  return testgen::load_queries_jsonl(io::read_file(ctx.store().path("queries.jsonl")));
}

// ---- ingest ----------------------------------------------------------------

std::vector<std::string> stage_ingest(Context& ctx, std::uint64_t, StageOutcome& out) {
  const auto& cfg = ctx.config();
  const corpus::Corpus c = corpus::ingest(cfg.corpus_paths, cfg.chunking);
  io::write_file(ctx.store().path("corpus.jsonl"), c.to_jsonl());
  json diags = json::array();
  for (const auto& d : c.diagnostics()) diags.push_back({{"path", d.path}, {"message", d.message}});
  write_json(ctx.store().path("ingest_diagnostics.json"),
             {{"documents", c.documents().size()},
              {"chunks", c.chunks().size()},
              {"diagnostics", std::move(diags)}});
  out.messages.push_back(std::to_string(c.documents().size()) + " documents, " +
                         std::to_string(c.chunks().size()) + " chunks, " +
                         std::to_string(c.diagnostics().size()) + " diagnostics");
  return {"corpus.jsonl", "ingest_diagnostics.json"};
}

// ---- topics ----------------------------------------------------------------

std::vector<std::string> stage_topics(Context& ctx, std::uint64_t seed, StageOutcome& out) {
  const auto& c = ctx.corpus();
  std::vector<std::string> texts;
  for (const auto& ch : c.chunks()) texts.push_back(ch.text());
  const auto vectors = providers::embed_batch(ctx.embedder(), texts);
  std::vector<std::vector<double>> rows;
  for (const auto& v : vectors) rows.push_back(v.values);
  topics::TopicsConfig tc = ctx.config().topics;
  tc.seed = seed;
  const auto model = topics::build_topics(c, Matrix::from_rows(rows), tc);
  write_json(ctx.store().path("topics.json"), model.to_json());
  io::write_file(ctx.store().path("topic_coordinates.csv"), model.coordinates_csv());
  out.messages.push_back(std::to_string(model.strata.size()) + " strata (" + model.method +
                         ")");
  return {"topics.json", "topic_coordinates.csv"};
}

// ---- generate --------------------------------------------------------------

std::vector<std::string> stage_generate(Context& ctx, std::uint64_t seed, StageOutcome& out) {
  const auto& cfg = ctx.config();
  const auto strata = topics::strata_from_json(read_json(ctx.store().path("topics.json")));
  testgen::TestgenConfig tc;
  tc.sampling = cfg.sampling.spec;
  tc.sampling.seed = seed;
  tc.types = cfg.sampling.query_types;
  tc.relevancy_threshold = cfg.sampling.relevancy_threshold;
  const auto templates = cfg.sampling.prompts_dir.empty()
                             ? testgen::PromptTemplates::defaults()
                             : testgen::PromptTemplates::load(cfg.sampling.prompts_dir);
  const auto set = testgen::build_test_set(ctx.corpus(), strata, tc, ctx.generator(),
                                           ctx.embedder(), templates);
  io::write_file(ctx.store().path("queries.jsonl"), set.queries_jsonl());
  write_json(ctx.store().path("testgen_report.json"), set.report_json());
  out.messages.push_back(std::to_string(set.queries.size()) + " queries accepted, " +
                         std::to_string(set.rejected.size()) + " rejected, " +
                         std::to_string(set.skips.size()) + " skips");
  if (set.queries.empty()) throw Error("generate: no query survived selection");
  return {"queries.jsonl", "testgen_report.json"};
}

// ---- evaluate --------------------------------------------------------------

std::vector<std::string> stage_evaluate(Context& ctx, std::uint64_t, StageOutcome& out) {
  const auto& cfg = ctx.config();
  auto queries = load_queries(ctx);
  std::sort(queries.begin(), queries.end(),
            [](const auto& a, const auto& b) { return a.query_id < b.query_id; });
  const std::string run_id = ctx.store().manifest().run_id;
  std::vector<json> rows;
  std::size_t tox_fail = 0, pii = 0, failures = 0;
  std::map<std::string, std::vector<double>> values;
  for (const auto& q : queries) {
    json row = {{"record_id", q.query_id},     {"query_id", q.query_id},
                {"stratum_id", q.stratum_id},  {"query_type", testgen::query_type_name(q.query_type)},
                {"perturbation", "clean"},     {"run_id", run_id},
                {"query", q.text}};
    json metrics_json = json::object();
    json failed = json::object();
    try {
      const auto resp = ctx.runner().run({q.text, std::nullopt});
      row["answer"] = resp.answer;
      row["retrieved_context"] = resp.retrieved_context;
      const auto scores = metrics::score_functional(q.text, resp.retrieved_context, resp.answer,
                                                    ctx.embedder(), ctx.nli(), cfg.metrics);
      for (const auto& [name, s] : scores) {
        metrics_json[name] = metrics::to_json(s);
        values[name].push_back(s.value);
      }
      const auto tox = risk::toxicity_score(resp.answer, ctx.classifier(),
                                            cfg.risk.toxicity_threshold, q.query_id);
      metrics_json["toxicity"] = {{"value", tox.score}};
      values["toxicity"].push_back(tox.score);
      if (!tox.passed) ++tox_fail;
      json findings = json::array();
      for (const auto& f : ctx.scanner().scan(resp.answer)) findings.push_back(f.to_json());
      pii += findings.size();
      row["risk"] = {{"toxicity", tox.to_json()}, {"pii", std::move(findings)}};
    } catch (const std::exception& e) {
      ++failures;
      for (const auto& name : metrics::functional_metric_names()) failed[name] = e.what();
      failed["toxicity"] = e.what();
    }
    row["metrics"] = std::move(metrics_json);
    row["failed"] = std::move(failed);
    rows.push_back(std::move(row));
  }
  io::write_file(ctx.store().path("records.jsonl"), io::to_jsonl(rows));

  json bias = json::array();
  std::size_t bias_flags = 0;
  for (const auto& tmpl : cfg.risk.bias.templates) {
    const auto report = risk::bias_probe(
        tmpl, cfg.risk.bias.pairs,
        [&](const std::string& query) { return ctx.runner().run({query, std::nullopt}).answer; },
        ctx.classifier(), ctx.embedder(), cfg.risk.bias.tolerance);
    for (const auto& [dim, d] : report.dimensions) bias_flags += d.flagged ? 1 : 0;
    json entry = report.to_json();
    entry["template"] = tmpl;
    bias.push_back(std::move(entry));
  }
  write_json(ctx.store().path("bias_report.json"), {{"probes", std::move(bias)}});

  json means = json::object();
  for (const auto& [name, v] : values) means[name] = stats::mean(v);
  write_json(ctx.store().path("evaluate_summary.json"),
             {{"records", rows.size()},
              {"failed_records", failures},
              {"metric_means", std::move(means)},
              {"toxicity_failures", tox_fail},
              {"toxicity_threshold", cfg.risk.toxicity_threshold},
              {"pii_findings", pii},
              {"bias_flags", bias_flags}});
  out.messages.push_back(std::to_string(rows.size()) + " records, " + std::to_string(failures) +
                         " failed");
  return {"records.jsonl", "evaluate_summary.json", "bias_report.json"};
}

// ---- calibrate -------------------------------------------------------------

std::map<std::string, std::vector<calibration::CalibrationSample>> collect_samples(
    Context& ctx, std::uint64_t seed, std::string& label_source) {
  const auto& cc = ctx.config().calibration;
  const auto records = weakness::load_records_jsonl(io::read_file(ctx.store().path("records.jsonl")));
  std::map<std::pair<std::string, std::string>, int> labels;
  if (!cc.labels.empty()) {
    labels = calibration::binarize_labels(
        calibration::parse_labels_csv(io::read_file(cc.labels)), cc.positive_min);
    label_source = "csv";
  } else {
    label_source = "simulated";
  }
  std::map<std::string, std::vector<calibration::CalibrationSample>> out;
  for (const auto& metric : cc.metrics) {
    auto& samples = out[metric];
    std::vector<double> xs;
    for (const auto& r : records) {
      const auto it = r.scores.find(metric);
      if (it != r.scores.end()) xs.push_back(it->second);
    }
    const double center = xs.empty() ? 0.0 : stats::quantile(xs, 0.5);
    for (const auto& r : records) {
      const auto it = r.scores.find(metric);
      if (it == r.scores.end()) continue;
      calibration::CalibrationSample s{it->second, 0, metric, r.record_id};
      if (!cc.labels.empty()) {
        const auto l = labels.find({r.record_id, metric});
        if (l == labels.end()) continue;
        s.y = l->second;
      } else {
        // Simulated annotator: agrees with probability logistic(12 (x - median)).
        Rng rng(mix64(seed ^ fnv1a64(r.record_id + "/" + metric)));
        s.y = rng.bernoulli(metrics::logistic(12.0 * (s.x - center))) ? 1 : 0;
      }
      samples.push_back(std::move(s));
    }
  }
  return out;
}

json samples_json(const std::vector<calibration::CalibrationSample>& s) {
  json a = json::array();
  for (const auto& c : s) a.push_back({{"record_id", c.record_id}, {"x", c.x}, {"y", c.y}});
  return a;
}

std::vector<calibration::CalibrationSample> samples_from_json(const json& a,
                                                              const std::string& metric) {
  std::vector<calibration::CalibrationSample> out;
  for (const auto& c : a) {
    out.push_back({c.at("x").get<double>(), c.at("y").get<int>(), metric,
                   c.at("record_id").get<std::string>()});
  }
  return out;
}

std::vector<std::string> stage_calibrate(Context& ctx, std::uint64_t seed, StageOutcome& out) {
  const auto& cc = ctx.config().calibration;
  std::string label_source;
  const auto samples = collect_samples(ctx, seed, label_source);
  json metrics_json = json::object();
  std::string curves = "metric,x,probability\n";
  for (const auto& [metric, all] : samples) {
    const std::uint64_t mseed = mix64(seed ^ fnv1a64(metric));
    auto [test, rest] = calibration::split_samples(all, cc.test_fraction, mseed);
    auto [stage1, stage2] = calibration::split_samples(rest, cc.stage1_fraction, mix64(mseed));
    json entry = {{"samples", all.size()},
                  {"stage1", samples_json(stage1)},
                  {"stage2", samples_json(stage2)},
                  {"test", samples_json(test)}};
    try {
      const auto fitted = calibration::fit_stage1(stage1, cc.method);
      entry["calibrator"] = fitted.to_json();
      double lo = 1.0, hi = -1.0;
      for (const auto& s : all) {
        lo = std::min(lo, s.x);
        hi = std::max(hi, s.x);
      }
      if (hi <= lo) hi = lo + 1.0;
      const std::string csv = calibration::calibration_curve_csv(fitted, lo, hi, 51);
      for (std::size_t pos = csv.find('\n') + 1; pos < csv.size();) {
        const std::size_t nl = csv.find('\n', pos);
        curves += metric + "," + csv.substr(pos, nl - pos) + "\n";
        pos = nl + 1;
      }
    } catch (const InvalidArgument& e) {
      entry["skipped"] = e.what();
      out.messages.push_back(metric + " not calibrated: " + e.what());
    }
    metrics_json[metric] = std::move(entry);
  }
  write_json(ctx.store().path("calibration.json"),
             {{"method", calibration::stage1_method_name(cc.method)},
              {"label_source", label_source},
              {"test_fraction", cc.test_fraction},
              {"stage1_fraction", cc.stage1_fraction},
              {"metrics", std::move(metrics_json)}});
  io::write_file(ctx.store().path("calibration_curves.csv"), curves);
  return {"calibration.json", "calibration_curves.csv"};
}

// ---- conformal -------------------------------------------------------------

std::vector<std::string> stage_conformal(Context& ctx, std::uint64_t, StageOutcome& out) {
  const auto& cc = ctx.config().calibration;
  const json cal = read_json(ctx.store().path("calibration.json"));
  const auto records =
      weakness::load_records_jsonl(io::read_file(ctx.store().path("records.jsonl")));
  json metrics_json = json::object();
  std::string sets = "record_id,metric,score,probability,prediction_set,needs_review\n";
  for (const auto& [metric, entry] : cal.at("metrics").items()) {
    if (!entry.contains("calibrator")) {
      metrics_json[metric] = {{"skipped", entry.value("skipped", "not calibrated")}};
      continue;
    }
    const auto stage1 = calibration::Stage1Calibrator::from_json(entry.at("calibrator"));
    const auto stage2 = samples_from_json(entry.at("stage2"), metric);
    const auto test = samples_from_json(entry.at("test"), metric);
    json m;
    try {
      const auto conf = calibration::conformal_calibrate(stage1, stage2, cc.alpha);
      m["conformal"] = conf.to_json();
      if (!test.empty()) {
        m["coverage"] = calibration::coverage_eval(stage1, conf, test).to_json();
        m["error_analysis"] =
            calibration::error_analysis(stage1, test, cc.decision_threshold).to_json();
      } else {
        m["coverage"] = "undefined (empty test split)";
      }
      for (const auto& r : records) {
        const auto it = r.scores.find(metric);
        if (it == r.scores.end()) continue;
        const double p = stage1.predict(it->second);
        const auto s = calibration::prediction_set(p, conf);
        sets += r.record_id + "," + metric + "," + io::format_double(it->second) + "," +
                io::format_double(p) + "," + std::string(calibration::prediction_set_name(s)) +
                "," + (s == calibration::PredictionSet::kEmpty ? "yes" : "no") + "\n";
      }
    } catch (const InvalidArgument& e) {
      m["skipped"] = e.what();
      out.messages.push_back(metric + " conformal skipped: " + e.what());
    }
    metrics_json[metric] = std::move(m);
  }
  write_json(ctx.store().path("conformal.json"),
             {{"alpha", cc.alpha},
              {"decision_threshold", cc.decision_threshold},
              {"metrics", std::move(metrics_json)}});
  io::write_file(ctx.store().path("prediction_sets.csv"), sets);
  return {"conformal.json", "prediction_sets.csv"};
}

// ---- robustness ------------------------------------------------------------

std::vector<std::string> stage_robustness(Context& ctx, std::uint64_t seed, StageOutcome& out) {
  const auto& rc = ctx.config().robustness;
  const auto& c = ctx.corpus();
  const auto strata = topics::strata_from_json(read_json(ctx.store().path("topics.json")));
  std::map<std::string, std::string> stratum_of;
  for (const auto& s : strata) {
    for (const auto& id : s.chunk_ids) stratum_of[id] = s.stratum_id;
  }
  std::vector<robustness::DistractorSource> distractors;
  for (const auto& ch : c.chunks()) {
    const auto it = stratum_of.find(ch.chunk_id);
    if (it != stratum_of.end() && it->second != topics::kNoiseStratumId) {
      distractors.push_back({&ch, it->second});
    }
  }
  std::vector<testgen::TestQuery> ood;
  json ood_json = json::array();
  if (rc.ood_count > 0) {
    std::vector<std::string> texts;
    for (const auto& ch : c.chunks()) texts.push_back(ch.text());
    const auto vectors = providers::embed_batch(ctx.embedder(), texts);
    const auto centroids = robustness::stratum_embedding_centroids(strata, c, vectors);
    const auto pool = robustness::parse_ood_pool(io::read_file(rc.ood_pool));
    for (auto& o : robustness::gen_ood_queries(pool, rc.ood_count, mix64(seed), centroids,
                                               ctx.embedder(), rc.ood_ceiling)) {
      json j = o.query.to_json();
      j["max_relevancy"] = o.max_relevancy;
      j["ceiling"] = rc.ood_ceiling;
      ood_json.push_back(std::move(j));
      ood.push_back(std::move(o.query));
    }
  }
  robustness::SuiteConfig sc;
  sc.kinds = rc.kinds;
  sc.typo_rate = rc.typo_rate;
  sc.colloquial_rate = rc.colloquial_rate;
  sc.distractor_position = rc.distractor_position;
  sc.worst_k = rc.worst_k;
  sc.seed = seed;
  sc.ood_ceiling = rc.ood_ceiling;
  sc.eval = ctx.config().metrics;
  const auto report = robustness::run_robustness_suite(load_queries(ctx), ctx.runner(), sc,
                                                       ctx.embedder(), ctx.nli(), distractors,
                                                       ood);
  write_json(ctx.store().path("robustness_report.json"), report.to_json());
  io::write_file(ctx.store().path("robustness_deltas.csv"), report.to_csv());
  std::vector<json> rows(ood_json.begin(), ood_json.end());
  io::write_file(ctx.store().path("ood_queries.jsonl"), io::to_jsonl(rows));
  out.messages.push_back(std::to_string(report.records.size()) + " perturbed runs, " +
                         std::to_string(report.failures.size()) + " failures, " +
                         std::to_string(ood.size()) + " OOD queries");
  return {"robustness_report.json", "robustness_deltas.csv", "ood_queries.jsonl"};
}

// ---- report ----------------------------------------------------------------

std::vector<std::string> stage_report(Context& ctx, std::uint64_t, StageOutcome& out) {
  const auto& cfg = ctx.config();
  auto records = weakness::load_records_jsonl(io::read_file(ctx.store().path("records.jsonl")));
  std::map<std::string, const weakness::EvalRecord*> by_query;
  for (const auto& r : records) by_query[r.query_id] = &r;

  // Perturbed runs become records tagged with their perturbation kind.
  const json rob = read_json(ctx.store().path("robustness_report.json"));
  std::vector<weakness::EvalRecord> perturbed;
  for (const auto& r : rob.at("records")) {
    const std::string qid = r.at("query_id").get<std::string>();
    const auto base = by_query.find(qid);
    if (base == by_query.end()) continue;
    weakness::EvalRecord e;
    e.query_id = qid;
    e.stratum_id = base->second->stratum_id;
    e.query_type = base->second->query_type;
    e.run_id = base->second->run_id;
    e.perturbation = r.at("perturbation").at("kind").get<std::string>();
    e.record_id = qid + "/" + e.perturbation;
    e.scores = r.at("perturbed").get<std::map<std::string, double>>();
    perturbed.push_back(std::move(e));
  }
  records.insert(records.end(), perturbed.begin(), perturbed.end());

  std::map<std::string, calibration::Stage1Calibrator> calibrators;
  const json cal = read_json(ctx.store().path("calibration.json"));
  for (const auto& [metric, entry] : cal.at("metrics").items()) {
    if (entry.contains("calibrator")) {
      calibrators[metric] = calibration::Stage1Calibrator::from_json(entry.at("calibrator"));
    }
  }
  const auto report = weakness::analyze(records, cfg.report.metrics, calibrators,
                                        weakness::parse_dimension(cfg.report.dim1),
                                        weakness::parse_dimension(cfg.report.dim2));
  std::vector<std::string> files;
  for (const auto& p : weakness::export_report(report, ctx.store().path("report"))) {
    files.push_back(fs::relative(p, ctx.store().dir()).generic_string());
  }

  // Gates.
  const json summary = read_json(ctx.store().path("evaluate_summary.json"));
  const json conformal = read_json(ctx.store().path("conformal.json"));
  json gates = json::array();
  auto gate = [&](const std::string& name, bool passed, const json& observed, const json& limit) {
    gates.push_back({{"gate", name}, {"passed", passed}, {"observed", observed}, {"limit", limit}});
    if (!passed) {
      out.gates_passed = false;
      out.messages.push_back("gate violated: " + name);
    }
  };
  for (const auto& [metric, lo] : cfg.gates.min_mean) {
    const auto& means = summary.at("metric_means");
    if (!means.contains(metric)) {
      gate("min_mean." + metric, false, "absent", lo);
      continue;
    }
    const double m = means.at(metric).get<double>();
    gate("min_mean." + metric, m >= lo, m, lo);
  }
  if (cfg.gates.max_toxicity_failures) {
    const auto n = summary.at("toxicity_failures").get<std::size_t>();
    gate("max_toxicity_failures", n <= *cfg.gates.max_toxicity_failures, n,
         *cfg.gates.max_toxicity_failures);
  }
  if (cfg.gates.max_pii_findings) {
    const auto n = summary.at("pii_findings").get<std::size_t>();
    gate("max_pii_findings", n <= *cfg.gates.max_pii_findings, n, *cfg.gates.max_pii_findings);
  }
  if (cfg.gates.max_bias_flags) {
    const auto n = summary.at("bias_flags").get<std::size_t>();
    gate("max_bias_flags", n <= *cfg.gates.max_bias_flags, n, *cfg.gates.max_bias_flags);
  }
  if (cfg.gates.min_coverage) {
    for (const auto& [metric, m] : conformal.at("metrics").items()) {
      if (!m.contains("coverage") || !m.at("coverage").is_object()) continue;
      const double cov = m.at("coverage").at("coverage").get<double>();
      gate("min_coverage." + metric, cov >= *cfg.gates.min_coverage, cov,
           *cfg.gates.min_coverage);
    }
  }
  write_json(ctx.store().path("gates.json"),
             {{"passed", out.gates_passed}, {"gates", std::move(gates)}});
  files.push_back("gates.json");
  out.messages.push_back(std::to_string(report.metrics.size()) + " metrics analyzed");
  return files;
}

using StageFn = std::vector<std::string> (*)(Context&, std::uint64_t, StageOutcome&);

StageFn stage_fn(std::string_view stage) {
  static const std::map<std::string_view, StageFn> fns = {
      {"ingest", stage_ingest},       {"topics", stage_topics},
      {"generate", stage_generate},   {"evaluate", stage_evaluate},
      {"calibrate", stage_calibrate}, {"conformal", stage_conformal},
      {"robustness", stage_robustness}, {"report", stage_report}};
  return fns.at(stage);
}

std::vector<fs::path> external_inputs(const RunConfig& cfg, std::string_view stage) {
  std::vector<fs::path> out;
  auto add = [&out](const fs::path& p) {
    if (!p.empty()) out.push_back(p);
  };
  if (stage == "ingest") {
    for (const auto& p : cfg.corpus_paths) add(p);
  } else if (stage == "generate") {
    add(cfg.sampling.prompts_dir);
  } else if (stage == "evaluate") {
    add(cfg.risk.lexicons_dir);
    add(cfg.risk.privacy_rules);
    add(cfg.risk.gazetteer);
  } else if (stage == "calibrate") {
    add(cfg.calibration.labels);
  } else if (stage == "robustness") {
    add(cfg.robustness.ood_pool);
  }
  return out;
}

// The report stage's gate verdict, re-read when the stage is skipped.
bool stored_gates_passed(const RunStore& store) {
  const fs::path p = store.path("gates.json");
  if (!fs::exists(p)) return true;
  return read_json(p).value("passed", true);
}

}  // namespace

int run_stages(const RunConfig& config, const std::vector<std::string>& stages, std::ostream& log) {
  for (const auto& s : stages) stage_index(s);
  RunLock lock(config.output_dir);
  RunStore store(config);
  Context ctx(config, store);
  bool gates_ok = true;
  for (const auto& stage : stages) {
    StageOutcome outcome;
    outcome.stage = stage;
    try {
      store.require_predecessor(stage);
      const std::string inputs = store.inputs_hash(stage, external_inputs(config, stage));
      if (store.up_to_date(stage, inputs)) {
        log << "[" << stage << "] up to date\n";
        if (stage == "report") gates_ok = gates_ok && stored_gates_passed(store);
        continue;
      }
      const std::uint64_t seed = derive_seed(config.seed, stage);
      outcome.files = stage_fn(stage)(ctx, seed, outcome);
      store.record(stage, inputs, seed, outcome.files);
      for (const auto& m : outcome.messages) log << "[" << stage << "] " << m << "\n";
      log << "[" << stage << "] wrote " << outcome.files.size() << " file(s)\n";
      gates_ok = gates_ok && outcome.gates_passed;
    } catch (const std::exception& e) {
      for (const auto& m : outcome.messages) log << "[" << stage << "] " << m << "\n";
      log << "[" << stage << "] error: " << e.what() << "\n";
      return kExitError;
    }
  }
  return gates_ok ? kExitOk : kExitGateViolated;
}

int run_all(const RunConfig& config, std::ostream& log) {
  return run_stages(config, std::vector<std::string>(kStages.begin(), kStages.end()), log);
}

}  // namespace ragval::pipeline
