#pragma once

#include <json.hpp>
#include <string>

#include "resrl/aggregate.hpp"
#include "resrl/config.hpp"

namespace resrl {

// Experiment drivers. Each writes per-run record files, aggregated curves or
// result tables, and a summary document into cfg.out_dir; wall-clock metadata
// goes to a separate sidecar so result files are bit-reproducible.

// First step at which the evaluation success rate holds >= threshold for two
// consecutive evaluations; `budget` when never reached.
long steps_to_solve(const TrainLog& log, long budget, double threshold = 0.9);

// First step at which the evaluation return has covered `frac` of the total
// improvement from the first to the last evaluation.
long steps_to_improvement_fraction(const TrainLog& log, double frac, long budget);

nlohmann::json run_sample_efficiency(const ExperimentConfig& cfg);
nlohmann::json run_variation_sweep(const ExperimentConfig& cfg);
nlohmann::json run_noise_sweep(const ExperimentConfig& cfg);
nlohmann::json run_bias_sweep(const ExperimentConfig& cfg);
nlohmann::json run_transfer(const ExperimentConfig& cfg);

// Dispatch on cfg.kind, then write summary.json plus the meta.json sidecar.
nlohmann::json run_experiment(const ExperimentConfig& cfg);

// Re-aggregates the evaluation-return curves of every *.jsonl run record in
// a directory onto their merged step grid.
void aggregate_directory(const std::string& in_dir, const std::string& out_file);

std::vector<SeriesPoint> eval_return_series(const TrainLog& log);
std::vector<SeriesPoint> eval_success_series(const TrainLog& log);

}  // namespace resrl
