#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "resrl/experiments.hpp"

namespace {

int cmd_run(const std::string& kind, const std::string& config_path,
            const std::string& seeds_csv, const std::string& out_dir) {
  resrl::ExperimentConfig cfg = resrl::load_config_file(config_path);
  if (cfg.kind.empty()) {
    cfg.kind = kind;
  } else if (cfg.kind != kind) {
    std::fprintf(stderr, "error: config is for '%s' but '%s' was requested\n",
                 cfg.kind.c_str(), kind.c_str());
    return 2;
  }
  if (!seeds_csv.empty()) {
    cfg.seeds.clear();
    std::size_t pos = 0;
    while (pos < seeds_csv.size()) {
      const std::size_t comma = seeds_csv.find(',', pos);
      const std::string tok = seeds_csv.substr(pos, comma - pos);
      cfg.seeds.push_back(std::stoull(tok));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;

  const nlohmann::json summary = resrl::run_experiment(cfg);
  std::printf("%s\n", summary.dump(2).c_str());
  return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& env_config, int episodes,
                 const std::string& mode_override, std::uint64_t seed) {
  const resrl::ExperimentConfig cfg = resrl::load_config_file(env_config);
  resrl::TD3Agent agent;
  resrl::RunMode mode = resrl::RunMode::kHandOnly;
  if (!checkpoint.empty()) {
    std::ifstream in(checkpoint, std::ios::binary);
    if (!in) {
      std::fprintf(stderr, "error: cannot open checkpoint %s\n", checkpoint.c_str());
      return 2;
    }
    std::string tag;
    agent = resrl::load_agent(in, cfg.agent, seed, &tag);
    mode = resrl::run_mode_from_name(tag);
  }
  if (!mode_override.empty()) mode = resrl::run_mode_from_name(mode_override);

  const resrl::EvalResult result =
      resrl::evaluate(mode, cfg.env, cfg.controller,
                      checkpoint.empty() ? nullptr : &agent, episodes, seed);
  std::printf("mode: %s\nepisodes: %d\nsuccess_rate: %.6f\nmean_return: %.6f\n",
              resrl::run_mode_name(mode).c_str(), episodes, result.success_rate,
              result.mean_return);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual-policy block insertion: training and experiment runner"};
  app.require_subcommand(1);

  std::string kind, config_path, seeds_csv, out_dir;
  CLI::App* run = app.add_subcommand("run", "Run one experiment family from a config file");
  run->add_option("experiment", kind,
                  "sample_efficiency | variation_sweep | noise_sweep | bias_sweep | transfer")
      ->required();
  run->add_option("--config", config_path, "Path to the JSON config")->required();
  run->add_option("--seeds", seeds_csv, "Comma-separated seed list overriding the config");
  run->add_option("--out", out_dir, "Output directory overriding the config");

  std::string agg_in, agg_out;
  CLI::App* agg = app.add_subcommand("aggregate", "Aggregate run records into a curve CSV");
  agg->add_option("--in", agg_in, "Directory of .jsonl run records")->required();
  agg->add_option("--out", agg_out, "Output CSV path")->required();

  std::string checkpoint, env_config, mode_override;
  int episodes = 20;
  std::uint64_t eval_seed = 0;
  CLI::App* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint (or the hand controller)");
  ev->add_option("--checkpoint", checkpoint, "Agent checkpoint; omit for the hand controller");
  ev->add_option("--env-config", env_config, "Config file providing env + controller")->required();
  ev->add_option("--episodes", episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
  ev->add_option("--mode", mode_override, "Override: residual | pure_rl | hand_only");
  ev->add_option("--seed", eval_seed, "Evaluation seed base");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(kind, config_path, seeds_csv, out_dir);
    if (agg->parsed()) {
      resrl::aggregate_directory(agg_in, agg_out);
      return 0;
    }
    if (ev->parsed()) return cmd_evaluate(checkpoint, env_config, episodes, mode_override,
                                          eval_seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
