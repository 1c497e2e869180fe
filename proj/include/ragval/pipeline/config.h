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

// Run configuration: one JSON document describing a whole pipeline run.
// Every object rejects keys it does not know; relative paths resolve
// against the directory of the config file.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragval/calibration/calibration.h"
#include "ragval/corpus/corpus.h"
#include "ragval/metrics/evaluate.h"
#include "ragval/metrics/risk.h"
#include "ragval/providers/config.h"
#include "ragval/robustness/robustness.h"
#include "ragval/testgen/testgen.h"
#include "ragval/topics/strata.h"

namespace ragval::pipeline {

struct RagConfig {
  std::string kind = "mock";  // mock | http | command
  std::string endpoint;       // http
  std::string command;        // command
  std::size_t top_k = 2;      // mock
  std::size_t answer_sentences = 2;
  std::chrono::milliseconds timeout{30000};
  providers::RetryPolicy retry;
};

struct ProvidersConfig {
  providers::ProviderConfig embedding;
  providers::ProviderConfig nli;
  providers::ProviderConfig generator;
  providers::ProviderConfig classifier;
  RagConfig rag;
  std::filesystem::path embedding_cache;  // empty: in-memory only
};

struct SamplingConfig {
  testgen::SamplingSpec spec;
  std::vector<testgen::QueryType> query_types;
  double relevancy_threshold = 0.3;
  std::filesystem::path prompts_dir;  // empty: built-in templates
};

struct BiasConfig {
  std::vector<std::string> templates;
  std::vector<risk::SwapPair> pairs;
  double tolerance = 0.1;
};

struct RiskConfig {
  double toxicity_threshold = 0.5;
  std::filesystem::path lexicons_dir;   // empty: built-in lexicons
  std::filesystem::path privacy_rules;  // empty: built-in rules
  std::filesystem::path gazetteer;      // empty: built-in names
  BiasConfig bias;
};

struct CalibrationConfig {
  calibration::Stage1Method method = calibration::Stage1Method::kPlatt;
  double alpha = 0.1;
  double test_fraction = 0.2;    // held out for coverage and error analysis
  double stage1_fraction = 0.5;  // of the remainder; the rest calibrates stage 2
  std::filesystem::path labels;  // CSV; empty requires simulated_labels
  double positive_min = 1.0;
  bool simulated_labels = false;
  double decision_threshold = 0.5;
  std::vector<std::string> metrics;
};

struct RobustnessConfig {
  std::vector<robustness::PerturbationKind> kinds;
  double typo_rate = 0.1;
  double colloquial_rate = 1.0;
  std::size_t distractor_position = 0;
  std::size_t worst_k = 5;
  std::filesystem::path ood_pool;
  std::size_t ood_count = 0;
  double ood_ceiling = robustness::kDefaultOodCeiling;
};

// Unset fields are not checked.
struct GateConfig {
  std::map<std::string, double> min_mean;  // metric -> lowest acceptable mean
  std::optional<std::size_t> max_toxicity_failures;
  std::optional<std::size_t> max_pii_findings;
  std::optional<std::size_t> max_bias_flags;
  std::optional<double> min_coverage;
};

struct ReportConfig {
  std::string dim1 = "topic";
  std::string dim2 = "query_type";
  std::vector<std::string> metrics;
};

struct RunConfig {
  std::vector<std::filesystem::path> corpus_paths;
  corpus::ChunkingConfig chunking;
  ProvidersConfig providers;
  topics::TopicsConfig topics;
  SamplingConfig sampling;
  metrics::EvalSettings metrics;
  RiskConfig risk;
  CalibrationConfig calibration;
  RobustnessConfig robustness;
  ReportConfig report;
  GateConfig gates;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  nlohmann::json source;  // the document as parsed, before defaults

  // Canonical JSON (paths as written after resolution). Excludes output_dir
  // so the same experiment hashes the same wherever it is written.
  nlohmann::json canonical_json() const;
  std::string hash() const;
  void validate() const;
};

// Command-line values that replace the file's.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir;
};

// Throws InvalidArgument with the JSON path of the offending key.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir,
                           const Overrides& overrides = {});
RunConfig load_run_config(const std::filesystem::path& file, const Overrides& overrides = {});

}  // namespace ragval::pipeline
