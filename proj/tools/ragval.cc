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

// ragval: run the evaluation pipeline, one stage or all of them.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ragval/common/error.h"
#include "ragval/pipeline/config.h"
#include "ragval/pipeline/pipeline.h"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "run config (JSON)")->required();
  cmd->add_option("--seed", flags.seed, "global seed, overrides the config");
  cmd->add_option("--out", flags.out, "run directory, overrides output_dir");
}

int execute(const Flags& flags, const std::vector<std::string>& stages) {
  using namespace ragval::pipeline;
  RunConfig config;
  try {
    Overrides o;
    o.seed = flags.seed;
    if (!flags.out.empty()) o.output_dir = flags.out;
    config = load_run_config(flags.config, o);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitError;
  }
  try {
    return run_stages(config, stages, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ragval: offline testing of retrieval-augmented generation systems"};
  app.set_version_flag("--version", std::string(ragval::pipeline::kToolVersion));
  app.require_subcommand(1);

  Flags flags;
  std::vector<std::string> stages;

  auto* run = app.add_subcommand("run", "run every stage in order (skips up-to-date stages)");
  add_flags(run, flags);
  run->callback([&] {
    stages.assign(ragval::pipeline::kStages.begin(), ragval::pipeline::kStages.end());
  });

  for (auto name : ragval::pipeline::kStages) {
    const std::string stage(name);
    auto* cmd = app.add_subcommand(stage, "run the " + stage + " stage");
    add_flags(cmd, flags);
    cmd->callback([&stages, stage] { stages = {stage}; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ragval::pipeline::kExitError;
  }
  return execute(flags, stages);
}
