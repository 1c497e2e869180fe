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

// Run directory management and the eight pipeline stages:
//
//   ingest -> topics -> generate -> evaluate -> calibrate -> conformal
//          -> robustness -> report
//
// Each stage reads its predecessor's files from the run directory, writes
// its own and records their SHA-256 in manifest.json. A stage whose inputs
// hash matches the manifest and whose files are intact is skipped.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragval/pipeline/config.h"

namespace ragval::pipeline {

inline constexpr const char* kToolVersion = "0.1.0";

inline constexpr std::array<std::string_view, 8> kStages = {
    "ingest", "topics", "generate", "evaluate", "calibrate", "conformal", "robustness", "report"};

// Throws InvalidArgument for an unknown name.
std::size_t stage_index(std::string_view stage);

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitGateViolated = 2;

struct FileEntry {
  std::string path;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct StageEntry {
  std::string stage;
  std::string inputs_hash;
  std::uint64_t stage_seed = 0;
  std::vector<FileEntry> files;
  std::string completed_at;
};

struct Manifest {
  std::string run_id;
  std::string config_hash;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  std::string created_at;
  std::string updated_at;
  std::map<std::string, StageEntry> stages;

  // "artifacts" lists the stages in pipeline order.
  nlohmann::json to_json() const;
  static Manifest from_json(const nlohmann::json& j);
};

// Exclusive ownership of a run directory through a lock file holding the
// owner's pid. A lock left by a dead process is taken over.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& dir);
  ~RunLock();
  RunLock(const RunLock&) = delete;
  RunLock& operator=(const RunLock&) = delete;

 private:
  std::filesystem::path path_;
};

class RunStore {
 public:
  // Creates the directory and manifest, or opens an existing run. Throws
  // InvalidArgument when the existing manifest belongs to another config.
  explicit RunStore(const RunConfig& config);

  const std::filesystem::path& dir() const { return dir_; }
  const Manifest& manifest() const { return manifest_; }

  // True when the stage entry exists and every recorded file still hashes
  // the same.
  bool intact(std::string_view stage) const;
  // Throws Error naming the stage to run first unless `stage`'s predecessor
  // is intact.
  void require_predecessor(std::string_view stage) const;
  bool up_to_date(std::string_view stage, const std::string& inputs_hash) const;

  // Hash of the config, the predecessor's files and `external` files.
  std::string inputs_hash(std::string_view stage,
                          const std::vector<std::filesystem::path>& external) const;

  std::filesystem::path path(const std::string& relative) const { return dir_ / relative; }
  void record(std::string_view stage, const std::string& inputs_hash, std::uint64_t stage_seed,
              const std::vector<std::string>& relative_files);

 private:
  void save();

  std::filesystem::path dir_;
  Manifest manifest_;
};

struct StageOutcome {
  std::string stage;
  bool skipped = false;  // already up to date
  std::vector<std::string> files;
  bool gates_passed = true;
  std::vector<std::string> messages;
};

// Runs `stages` in order against the run directory; returns an exit code.
// Errors are reported on `log` and yield kExitError.
int run_stages(const RunConfig& config, const std::vector<std::string>& stages, std::ostream& log);

// All eight stages.
int run_all(const RunConfig& config, std::ostream& log);

}  // namespace ragval::pipeline
