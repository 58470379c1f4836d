#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "resrl/residual.hpp"

namespace resrl {

// One experiment: which family to run, the sweep values and seeds, and the
// nested module configurations. Parsed strictly: an unknown key anywhere in
// the document is an error.
struct ExperimentConfig {
  std::string kind;  // sample_efficiency | variation_sweep | noise_sweep | bias_sweep | transfer
  std::vector<std::uint64_t> seeds;
  std::string out_dir = "out";
  std::vector<double> sweep;
  int workers = 0;  // 0 = hardware concurrency
  int final_eval_episodes = 20;
  nlohmann::json target_overrides;  // transfer: section overrides for the target env

  EnvConfig env;
  PControllerParams controller;
  TD3Config agent;
  TrainConfig train;

  nlohmann::json document;  // the original parsed document, for override merging
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config_file(const std::string& path);

// Deep-merge: scalar and array values in `overrides` replace those in `base`;
// nested objects merge recursively.
nlohmann::json merge_overrides(nlohmann::json base, const nlohmann::json& overrides);

RunSpec make_run_spec(const ExperimentConfig& cfg, RunMode mode, std::uint64_t seed);

}  // namespace resrl
