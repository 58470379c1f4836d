#pragma once

#include <json.hpp>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "resrl/controller.hpp"
#include "resrl/env.hpp"
#include "resrl/td3.hpp"

namespace resrl {

// Training loop that superposes the learned residual policy on the hand
// controller: the executed command is clip(u_rl + u_H), while the replay
// buffer only ever sees u_rl.

enum class RunMode { kResidual, kPureRl, kHandOnly };

std::string run_mode_name(RunMode mode);
RunMode run_mode_from_name(const std::string& name);

struct TrainConfig {
  int total_steps = 30000;
  int eval_period = 1000;
  int eval_episodes = 20;
  bool log_steps = false;

  void validate() const;
};

struct RunSpec {
  RunMode mode = RunMode::kResidual;
  EnvConfig env;
  PControllerParams controller;
  TD3Config agent;
  TrainConfig train;
  std::uint64_t seed = 0;
  std::string init_checkpoint;  // empty = fresh networks

  void validate() const;
};

struct StepRecord {
  long step = 0;
  int episode = 0;
  double reward = 0.0;
  Action executed;
  Action residual;
};

struct EpisodeRecord {
  int episode = 0;
  long end_step = 0;
  double ret = 0.0;
  bool success = false;
  double final_tilt_left = 0.0;
  double final_tilt_right = 0.0;
  int length = 0;
};

struct EvalRecord {
  long step = 0;
  double success_rate = 0.0;
  double mean_return = 0.0;
  int episodes = 0;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpisodeRecord> episodes;
  std::vector<EvalRecord> evals;
  bool aborted = false;
  std::string abort_reason;
};

// Streaming record consumer; the file sink flushes per record so an
// interrupted run loses at most one line.
class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void write(const nlohmann::json& record) = 0;
};

class JsonlFileSink : public RecordSink {
 public:
  explicit JsonlFileSink(const std::string& path);
  void write(const nlohmann::json& record) override;

 private:
  std::ofstream out_;
};

// clip(u_rl + u_H) onto the action bounds.
Action compose(const Action& u_rl, const Action& u_h, double a_max);

struct EvalResult {
  double success_rate = 0.0;
  double mean_return = 0.0;
};

// Deterministic-policy evaluation over fresh episodes (no exploration noise;
// actuation noise stays, it is part of the environment).
EvalResult evaluate(RunMode mode, const EnvConfig& env_cfg, const PControllerParams& ctrl_cfg,
                    TD3Agent* agent, int n_episodes, std::uint64_t seed_base);

// Full training run. Optionally hands back the trained agent and streams
// records to the sink. A non-finite reward or action aborts with a
// diagnostic record instead of crashing.
TrainLog train(const RunSpec& spec, TD3Agent* agent_out = nullptr,
               RecordSink* sink = nullptr, ReplayBuffer* buffer_out = nullptr);

nlohmann::json to_json(const StepRecord& r);
nlohmann::json to_json(const EpisodeRecord& r);
nlohmann::json to_json(const EvalRecord& r);

}  // namespace resrl
