// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef MEDTK_TOOLS_APP_HPP
#define MEDTK_TOOLS_APP_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace medtk::cli {

// Everything a run can be configured with. A JSON config file may set any of
// these by key; command-line flags win over the file. Unknown keys are
// rejected.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  bool verbose = false;
  std::string backend = "mock-hash";
  int max_concurrency = 1;
  int timeout_ms = 5000;
  int shots = 0;
  std::map<std::string, std::string> datasets;  // name -> jsonl path
  double lambda = 0.0;                          // 0 selects the per-layer default
  double beta = 0.1;
  int k = 1000;
  std::vector<int> ngram_orders = {3, 5};
  bool length_normalize = false;
  bool partial_failures = false;
};

RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);

// One row per config key: which flag sets it and on which subcommands the
// flag appears ("*" = global). The help doc test cross-checks this table.
struct FlagSpec {
  std::string key;
  std::string flag;
  std::vector<std::string> subcommands;
};
const std::vector<FlagSpec>& config_schema();

const std::vector<std::string>& subcommand_names();
std::string help_text(const std::string& subcommand);  // "" = top-level help

// Full CLI entry point: parse, dispatch, write outputs + manifest.
// Exit codes: 0 success, 1 domain error, 2 usage error.
int run(const std::vector<std::string>& args);

}  // namespace medtk::cli

#endif  // MEDTK_TOOLS_APP_HPP
