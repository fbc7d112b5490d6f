// Copyright 2026 The medtk Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include "app.hpp"
#include "json.hpp"
#include "medtk/error.hpp"
#include "medtk/util.hpp"

using nlohmann::json;

namespace medtk::cli {

RunConfig load_config(const std::string& path) {
  json j = json::parse(util::read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error(Err::ConfigInvalid, "config file is not a JSON object: " + path);
  static const std::set<std::string> known = {
      "seed",       "output_dir",      "verbose",          "backend",
      "max_concurrency", "timeout_ms", "shots",            "datasets",
      "lambda",     "beta",            "k",                "ngram_orders",
      "length_normalize", "partial_failures"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key))
      throw Error(Err::ConfigInvalid, "unknown config key: " + key);

  RunConfig cfg;
  try {
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("verbose")) cfg.verbose = j["verbose"].get<bool>();
    if (j.contains("backend")) cfg.backend = j["backend"].get<std::string>();
    if (j.contains("max_concurrency"))
      cfg.max_concurrency = j["max_concurrency"].get<int>();
    if (j.contains("timeout_ms")) cfg.timeout_ms = j["timeout_ms"].get<int>();
    if (j.contains("shots")) cfg.shots = j["shots"].get<int>();
    if (j.contains("datasets"))
      for (const auto& [name, p] : j["datasets"].items())
        cfg.datasets[name] = p.get<std::string>();
    if (j.contains("lambda")) cfg.lambda = j["lambda"].get<double>();
    if (j.contains("beta")) cfg.beta = j["beta"].get<double>();
    if (j.contains("k")) cfg.k = j["k"].get<int>();
    if (j.contains("ngram_orders"))
      cfg.ngram_orders = j["ngram_orders"].get<std::vector<int>>();
    if (j.contains("length_normalize"))
      cfg.length_normalize = j["length_normalize"].get<bool>();
    if (j.contains("partial_failures"))
      cfg.partial_failures = j["partial_failures"].get<bool>();
  } catch (const json::exception& e) {
    throw Error(Err::ConfigInvalid, std::string("bad config value: ") + e.what());
  }
  return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
  json j{{"seed", cfg.seed},
         {"output_dir", cfg.output_dir},
         {"verbose", cfg.verbose},
         {"backend", cfg.backend},
         {"max_concurrency", cfg.max_concurrency},
         {"timeout_ms", cfg.timeout_ms},
         {"shots", cfg.shots},
         {"datasets", cfg.datasets},
         {"lambda", cfg.lambda},
         {"beta", cfg.beta},
         {"k", cfg.k},
         {"ngram_orders", cfg.ngram_orders},
         {"length_normalize", cfg.length_normalize},
         {"partial_failures", cfg.partial_failures}};
  return j.dump();
}

const std::vector<FlagSpec>& config_schema() {
  static const std::vector<FlagSpec> schema = {
      {"seed", "--seed", {"*"}},
      {"output_dir", "--output-dir", {"*"}},
      {"verbose", "--verbose", {"*"}},
      {"backend", "--backend", {"eval"}},
      {"max_concurrency", "--concurrency", {"eval", "contam"}},
      {"timeout_ms", "--timeout-ms", {"eval", "prefs"}},
      {"shots", "--shots", {"eval", "prompts"}},
      {"datasets", "--items", {"eval", "prompts"}},
      {"lambda", "--lambda", {"influence"}},
      {"beta", "--beta", {"dpo-loss", "dpo-fit"}},
      {"k", "--k", {"influence"}},
      {"ngram_orders", "--n", {"contam"}},
      {"length_normalize", "--length-normalize", {"eval"}},
      {"partial_failures", "--partial-failures", {"eval"}},
  };
  return schema;
}

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {
      "ingest",  "stats",     "contam", "prompts",  "eval",     "uncertainty",
      "prefs",   "agreement", "dpo-loss", "dpo-fit", "influence", "recipe"};
  return names;
}

}  // namespace medtk::cli
