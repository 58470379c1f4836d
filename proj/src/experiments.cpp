#include "resrl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

namespace resrl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num_tag(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

struct Job {
  RunSpec spec;
  std::string record_path;
  std::string checkpoint_path;  // empty: no checkpoint written
  std::string label;
};

std::mutex g_progress_mutex;

void progress(const std::string& line) {
  std::lock_guard<std::mutex> lock(g_progress_mutex);
  std::fprintf(stderr, "[resrl] %s\n", line.c_str());
}

// Runs every job on a small worker pool. Each job owns its record and
// checkpoint files, so scheduling cannot affect any output byte.
std::vector<TrainLog> execute_jobs(const std::vector<Job>& jobs, int workers) {
  std::vector<TrainLog> logs(jobs.size());
  if (jobs.empty()) return logs;
  int n_workers = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  if (n_workers < 1) n_workers = 1;
  n_workers = std::min<int>(n_workers, static_cast<int>(jobs.size()));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  auto work = [&]() {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();) {
      if (failed.load()) return;
      const Job& job = jobs[i];
      try {
        JsonlFileSink sink(job.record_path);
        TD3Agent agent;
        logs[i] = train(job.spec, &agent, &sink);
        if (!job.checkpoint_path.empty() && job.spec.mode != RunMode::kHandOnly) {
          std::ofstream out(job.checkpoint_path, std::ios::binary | std::ios::trunc);
          save_agent(agent, run_mode_name(job.spec.mode), out);
        }
        char line[256];
        const double fin = logs[i].evals.empty() ? 0.0 : logs[i].evals.back().mean_return;
        const double suc = logs[i].evals.empty() ? 0.0 : logs[i].evals.back().success_rate;
        std::snprintf(line, sizeof(line), "%s done (return=%.3f success=%.2f%s)",
                      job.label.c_str(), fin, suc, logs[i].aborted ? " ABORTED" : "");
        progress(line);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        failure = job.label + ": " + e.what();
        failed.store(true);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int t = 0; t < n_workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (failed.load()) throw std::runtime_error("experiment job failed: " + failure);
  return logs;
}

// Aborted runs are excluded with a warning; losing more than half a group
// invalidates the experiment.
std::vector<const TrainLog*> usable(const std::vector<const TrainLog*>& group,
                                    const std::string& name) {
  std::vector<const TrainLog*> ok;
  for (const TrainLog* log : group) {
    if (log->aborted) {
      progress("warning: run aborted in group " + name + ", excluded");
    } else {
      ok.push_back(log);
    }
  }
  if (ok.size() * 2 <= group.size()) {
    throw std::runtime_error("experiment failed: more than half the runs aborted in " + name);
  }
  return ok;
}

void write_group_curves(const std::string& out_dir, const std::string& name,
                        const std::vector<const TrainLog*>& logs) {
  std::vector<std::vector<SeriesPoint>> returns, successes;
  for (const TrainLog* log : logs) {
    returns.push_back(eval_return_series(*log));
    successes.push_back(eval_success_series(*log));
  }
  write_curve_csv(join(out_dir, "curve_" + name + "_return.csv"),
                  aggregate(returns, merged_grid(returns)));
  write_curve_csv(join(out_dir, "curve_" + name + "_success.csv"),
                  aggregate(successes, merged_grid(successes)));
}

double median_final_return(const std::vector<const TrainLog*>& logs) {
  std::vector<double> v;
  for (const TrainLog* log : logs) v.push_back(log->evals.back().mean_return);
  return median(v);
}

double median_final_success(const std::vector<const TrainLog*>& logs) {
  std::vector<double> v;
  for (const TrainLog* log : logs) v.push_back(log->evals.back().success_rate);
  return median(v);
}

double mean_final_return(const std::vector<const TrainLog*>& logs) {
  double sum = 0.0;
  for (const TrainLog* log : logs) sum += log->evals.back().mean_return;
  return sum / static_cast<double>(logs.size());
}

std::vector<const TrainLog*> slice(const std::vector<TrainLog>& logs, std::size_t begin,
                                   std::size_t count) {
  std::vector<const TrainLog*> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(&logs[begin + i]);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

void write_summary(const ExperimentConfig& cfg, const json& summary) {
  write_text(join(cfg.out_dir, "summary.json"), summary.dump(2) + "\n");
}

// Hand-controller evaluation under the same environment draw, one result per
// seed. No training is involved.
std::vector<EvalResult> hand_evals(const ExperimentConfig& cfg, const EnvConfig& env,
                                   std::uint64_t point_tag) {
  std::vector<EvalResult> out;
  for (std::uint64_t seed : cfg.seeds) {
    out.push_back(evaluate(RunMode::kHandOnly, env, cfg.controller, nullptr,
                           cfg.final_eval_episodes, mix_seed(seed, point_tag)));
  }
  return out;
}

double median_return(const std::vector<EvalResult>& evals) {
  std::vector<double> v;
  for (const EvalResult& e : evals) v.push_back(e.mean_return);
  return median(v);
}

double median_success(const std::vector<EvalResult>& evals) {
  std::vector<double> v;
  for (const EvalResult& e : evals) v.push_back(e.success_rate);
  return median(v);
}

}  // namespace

std::vector<SeriesPoint> eval_return_series(const TrainLog& log) {
  std::vector<SeriesPoint> out;
  for (const EvalRecord& e : log.evals) out.push_back({static_cast<double>(e.step), e.mean_return});
  return out;
}

std::vector<SeriesPoint> eval_success_series(const TrainLog& log) {
  std::vector<SeriesPoint> out;
  for (const EvalRecord& e : log.evals) {
    out.push_back({static_cast<double>(e.step), e.success_rate});
  }
  return out;
}

long steps_to_solve(const TrainLog& log, long budget, double threshold) {
  for (std::size_t i = 0; i + 1 < log.evals.size(); ++i) {
    if (log.evals[i].success_rate >= threshold && log.evals[i + 1].success_rate >= threshold) {
      return log.evals[i].step;
    }
  }
  return budget;
}

long steps_to_improvement_fraction(const TrainLog& log, double frac, long budget) {
  if (log.evals.empty()) return budget;
  const double init = log.evals.front().mean_return;
  const double fin = log.evals.back().mean_return;
  if (fin <= init) return log.evals.front().step;
  const double threshold = init + frac * (fin - init);
  for (const EvalRecord& e : log.evals) {
    if (e.mean_return >= threshold) return e.step;
  }
  return budget;
}

json run_sample_efficiency(const ExperimentConfig& cfg) {
  const RunMode modes[3] = {RunMode::kResidual, RunMode::kPureRl, RunMode::kHandOnly};
  std::vector<Job> jobs;
  for (RunMode mode : modes) {
    for (std::uint64_t seed : cfg.seeds) {
      Job job;
      job.spec = make_run_spec(cfg, mode, seed);
      const std::string name = run_mode_name(mode) + "_seed" + std::to_string(seed);
      job.record_path = join(cfg.out_dir, "run_" + name + ".jsonl");
      job.label = "sample_efficiency " + name;
      jobs.push_back(std::move(job));
    }
  }
  const std::vector<TrainLog> logs = execute_jobs(jobs, cfg.workers);

  json summary;
  summary["experiment"] = "sample_efficiency";
  const std::size_t per = cfg.seeds.size();
  for (int m = 0; m < 3; ++m) {
    const std::string name = run_mode_name(modes[m]);
    const auto group = usable(slice(logs, m * per, per), name);
    write_group_curves(cfg.out_dir, name, group);
    std::vector<double> solves, to90;
    for (const TrainLog* log : group) {
      solves.push_back(static_cast<double>(
          steps_to_solve(*log, cfg.train.total_steps)));
      to90.push_back(static_cast<double>(
          steps_to_improvement_fraction(*log, 0.9, cfg.train.total_steps)));
    }
    summary[name] = {{"runs", group.size()},
                     {"median_steps_to_solve", median(solves)},
                     {"median_steps_to_90pct_improvement", median(to90)},
                     {"median_final_return", median_final_return(group)},
                     {"mean_final_return", mean_final_return(group)},
                     {"median_final_success", median_final_success(group)}};
  }
  write_summary(cfg, summary);
  return summary;
}

namespace {

// Shared driver for the three single-parameter sweeps.
json run_parameter_sweep(const ExperimentConfig& cfg, const std::string& experiment,
                         const std::string& param_name,
                         const std::function<void(EnvConfig&, double)>& apply) {
  std::vector<Job> jobs;
  for (std::size_t pi = 0; pi < cfg.sweep.size(); ++pi) {
    for (std::uint64_t seed : cfg.seeds) {
      Job job;
      job.spec = make_run_spec(cfg, RunMode::kResidual, seed);
      apply(job.spec.env, cfg.sweep[pi]);
      const std::string name = "residual_" + param_name + num_tag(cfg.sweep[pi]) + "_seed" +
                               std::to_string(seed);
      job.record_path = join(cfg.out_dir, "run_" + name + ".jsonl");
      job.label = experiment + " " + name;
      jobs.push_back(std::move(job));
    }
  }
  const std::vector<TrainLog> logs = execute_jobs(jobs, cfg.workers);

  json rows = json::array();
  std::string csv = param_name +
                    ",hand_median_return,hand_median_success,residual_median_return,"
                    "residual_median_success,n_runs\n";
  const std::size_t per = cfg.seeds.size();
  for (std::size_t pi = 0; pi < cfg.sweep.size(); ++pi) {
    const double value = cfg.sweep[pi];
    EnvConfig env = cfg.env;
    apply(env, value);
    const auto hand = hand_evals(cfg, env, 0x6A3D + pi);
    const auto group = usable(slice(logs, pi * per, per), param_name + num_tag(value));
    json row = {{param_name, value},
                {"hand_median_return", median_return(hand)},
                {"hand_median_success", median_success(hand)},
                {"residual_median_return", median_final_return(group)},
                {"residual_median_success", median_final_success(group)},
                {"n_runs", group.size()}};
    rows.push_back(row);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", value,
                  median_return(hand), median_success(hand), median_final_return(group),
                  median_final_success(group), group.size());
    csv += buf;
  }
  write_text(join(cfg.out_dir, experiment + "_results.csv"), csv);
  json summary = {{"experiment", experiment}, {"rows", rows}};
  write_summary(cfg, summary);
  return summary;
}

}  // namespace

json run_variation_sweep(const ExperimentConfig& cfg) {
  return run_parameter_sweep(cfg, "variation_sweep", "r", [](EnvConfig& env, double r) {
    env.rotation_range = r;
  });
}

json run_noise_sweep(const ExperimentConfig& cfg) {
  return run_parameter_sweep(cfg, "noise_sweep", "sigma", [](EnvConfig& env, double s) {
    env.noise.sigma = s;
    env.noise.bias = 0.0;
  });
}

json run_bias_sweep(const ExperimentConfig& cfg) {
  return run_parameter_sweep(cfg, "bias_sweep", "mu", [](EnvConfig& env, double m) {
    env.noise.bias = m;
  });
}

json run_transfer(const ExperimentConfig& cfg) {
  const ExperimentConfig target_cfg =
      parse_config(merge_overrides(cfg.document, cfg.target_overrides));

  const RunMode modes[2] = {RunMode::kResidual, RunMode::kPureRl};
  std::vector<Job> phase1;
  for (RunMode mode : modes) {
    for (std::uint64_t seed : cfg.seeds) {
      Job job;
      job.spec = make_run_spec(cfg, mode, seed);
      const std::string name = "source_" + run_mode_name(mode) + "_seed" + std::to_string(seed);
      job.record_path = join(cfg.out_dir, "run_" + name + ".jsonl");
      job.checkpoint_path = join(cfg.out_dir, "ckpt_" + name + ".bin");
      job.label = "transfer " + name;
      phase1.push_back(std::move(job));
    }
  }
  execute_jobs(phase1, cfg.workers);

  std::vector<Job> phase2;
  std::vector<std::string> cells;
  for (RunMode mode : modes) {
    for (const std::string variant : {"scratch", "init"}) {
      cells.push_back("target_" + run_mode_name(mode) + "_" + variant);
      for (std::uint64_t seed : cfg.seeds) {
        Job job;
        job.spec = make_run_spec(target_cfg, mode, seed);
        if (variant == "init") {
          job.spec.init_checkpoint = join(
              cfg.out_dir, "ckpt_source_" + run_mode_name(mode) + "_seed" +
                               std::to_string(seed) + ".bin");
        }
        const std::string name = cells.back() + "_seed" + std::to_string(seed);
        job.record_path = join(cfg.out_dir, "run_" + name + ".jsonl");
        job.label = "transfer " + name;
        phase2.push_back(std::move(job));
      }
    }
  }
  const std::vector<TrainLog> logs = execute_jobs(phase2, cfg.workers);

  json summary;
  summary["experiment"] = "transfer";
  std::string csv = "cell,median_steps_to_solve,median_final_return,median_final_success,n_runs\n";
  const std::size_t per = cfg.seeds.size();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto group = usable(slice(logs, c * per, per), cells[c]);
    write_group_curves(cfg.out_dir, cells[c], group);
    std::vector<double> solves;
    for (const TrainLog* log : group) {
      solves.push_back(static_cast<double>(steps_to_solve(*log, target_cfg.train.total_steps)));
    }
    summary[cells[c]] = {{"median_steps_to_solve", median(solves)},
                         {"median_final_return", median_final_return(group)},
                         {"median_final_success", median_final_success(group)},
                         {"runs", group.size()}};
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%zu\n", cells[c].c_str(),
                  median(solves), median_final_return(group), median_final_success(group),
                  group.size());
    csv += buf;
  }
  write_text(join(cfg.out_dir, "transfer_results.csv"), csv);
  write_summary(cfg, summary);
  return summary;
}

json run_experiment(const ExperimentConfig& cfg) {
  if (cfg.kind.empty()) throw std::invalid_argument("config has no experiment.kind");
  fs::create_directories(cfg.out_dir);
  const auto start = std::chrono::steady_clock::now();

  json summary;
  if (cfg.kind == "sample_efficiency") {
    summary = run_sample_efficiency(cfg);
  } else if (cfg.kind == "variation_sweep") {
    summary = run_variation_sweep(cfg);
  } else if (cfg.kind == "noise_sweep") {
    summary = run_noise_sweep(cfg);
  } else if (cfg.kind == "bias_sweep") {
    summary = run_bias_sweep(cfg);
  } else if (cfg.kind == "transfer") {
    summary = run_transfer(cfg);
  } else {
    throw std::invalid_argument("unknown experiment kind: " + cfg.kind);
  }

  // Wall-clock details live only here; every result file stays reproducible.
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  json meta = {{"elapsed_seconds", elapsed},
               {"unix_time", std::chrono::duration_cast<std::chrono::seconds>(now).count()}};
  write_text(join(cfg.out_dir, "meta.json"), meta.dump(2) + "\n");
  return summary;
}

void aggregate_directory(const std::string& in_dir, const std::string& out_file) {
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (entry.path().extension() == ".jsonl") paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw std::runtime_error("no .jsonl run records in " + in_dir);

  std::vector<std::vector<SeriesPoint>> runs;
  for (const std::string& path : paths) {
    std::ifstream in(path);
    std::vector<SeriesPoint> series;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json rec = json::parse(line);
      if (rec.value("type", "") == "eval") {
        series.push_back({rec["step"].get<double>(), rec["mean_return"].get<double>()});
      }
    }
    if (!series.empty()) runs.push_back(std::move(series));
  }
  if (runs.empty()) throw std::runtime_error("no evaluation records found in " + in_dir);
  if (runs.size() == 1) progress("warning: single run, interval collapses to the mean");
  write_curve_csv(out_file, aggregate(runs, merged_grid(runs)));
}

}  // namespace resrl
