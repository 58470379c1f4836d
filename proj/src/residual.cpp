#include "resrl/residual.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace resrl {

namespace {

// Seed-stream tags keeping episode, evaluation, agent and noise streams apart.
constexpr std::uint64_t kAgentStream = 0xA6E57;
constexpr std::uint64_t kNoiseStream = 0x4015E;
constexpr std::uint64_t kEvalStream = 0xE7A1;
constexpr std::uint64_t kEpisodeStream = 0xE915;

}  // namespace

std::string run_mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::kResidual: return "residual";
    case RunMode::kPureRl: return "pure_rl";
    case RunMode::kHandOnly: return "hand_only";
  }
  return "unknown";
}

RunMode run_mode_from_name(const std::string& name) {
  if (name == "residual") return RunMode::kResidual;
  if (name == "pure_rl") return RunMode::kPureRl;
  if (name == "hand_only") return RunMode::kHandOnly;
  throw std::invalid_argument("unknown run mode: " + name);
}

void TrainConfig::validate() const {
  if (total_steps < 1) throw std::invalid_argument("train: total_steps must be >= 1");
  if (eval_period < 1) throw std::invalid_argument("train: eval_period must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("train: eval_episodes must be >= 1");
}

void RunSpec::validate() const {
  env.validate();
  controller.validate();
  agent.validate();
  train.validate();
  if (mode == RunMode::kHandOnly && !init_checkpoint.empty()) {
    throw std::invalid_argument("run spec: hand_only takes no agent checkpoint");
  }
}

JsonlFileSink::JsonlFileSink(const std::string& path) : out_(path, std::ios::trunc) {
  if (!out_) throw std::runtime_error("cannot open record file: " + path);
}

void JsonlFileSink::write(const nlohmann::json& record) {
  out_ << record.dump() << '\n';
  out_.flush();
}

Action compose(const Action& u_rl, const Action& u_h, double a_max) {
  auto clip = [a_max](double v) { return std::min(std::max(v, -a_max), a_max); };
  return Action{clip(u_rl.dx + u_h.dx), clip(u_rl.dz + u_h.dz)};
}

nlohmann::json to_json(const StepRecord& r) {
  return {{"type", "step"},
          {"step", r.step},
          {"episode", r.episode},
          {"reward", r.reward},
          {"executed", {r.executed.dx, r.executed.dz}},
          {"residual", {r.residual.dx, r.residual.dz}}};
}

nlohmann::json to_json(const EpisodeRecord& r) {
  return {{"type", "episode"},
          {"episode", r.episode},
          {"end_step", r.end_step},
          {"return", r.ret},
          {"success", r.success},
          {"final_tilts", {r.final_tilt_left, r.final_tilt_right}},
          {"length", r.length}};
}

nlohmann::json to_json(const EvalRecord& r) {
  return {{"type", "eval"},
          {"step", r.step},
          {"success_rate", r.success_rate},
          {"mean_return", r.mean_return},
          {"episodes", r.episodes}};
}

EvalResult evaluate(RunMode mode, const EnvConfig& env_cfg, const PControllerParams& ctrl_cfg,
                    TD3Agent* agent, int n_episodes, std::uint64_t seed_base) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate: n_episodes must be >= 1");
  if (mode != RunMode::kHandOnly && agent == nullptr) {
    throw std::invalid_argument("evaluate: this mode needs an agent");
  }
  EnvConfig cfg = env_cfg;
  cfg.noise.seed = mix_seed(seed_base, kNoiseStream);
  Env env(cfg);
  PController controller(ctrl_cfg);

  int successes = 0;
  double total_return = 0.0;
  for (int ep = 0; ep < n_episodes; ++ep) {
    Obs obs = env.reset(mix_seed(seed_base, ep));
    controller.reset();
    double ep_return = 0.0;
    bool success = false;
    for (int t = 0; t < cfg.horizon; ++t) {
      Action u_rl{0.0, 0.0};
      if (mode != RunMode::kHandOnly) {
        u_rl = select_action(*agent, obs, /*explore=*/false, /*warmup=*/false);
      }
      Action u_h{0.0, 0.0};
      if (mode != RunMode::kPureRl) u_h = controller.act(obs);
      const StepResult res = env.step(compose(u_rl, u_h, cfg.a_max));
      ep_return += res.reward;
      obs = res.observation;
      if (res.done) {
        success = res.success;
        break;
      }
    }
    successes += success ? 1 : 0;
    total_return += ep_return;
  }
  return EvalResult{static_cast<double>(successes) / n_episodes, total_return / n_episodes};
}

TrainLog train(const RunSpec& spec, TD3Agent* agent_out, RecordSink* sink,
               ReplayBuffer* buffer_out) {
  spec.validate();
  const bool learns = spec.mode != RunMode::kHandOnly;

  EnvConfig env_cfg = spec.env;
  env_cfg.noise.seed = mix_seed(spec.seed, kNoiseStream);
  Env env(env_cfg);

  PControllerParams ctrl_cfg = spec.controller;
  ctrl_cfg.a_max = env_cfg.a_max;
  PController controller(ctrl_cfg);

  TD3Agent agent;
  if (learns) {
    if (spec.init_checkpoint.empty()) {
      agent = make_agent(spec.agent, env_cfg.a_max, mix_seed(spec.seed, kAgentStream));
    } else {
      std::ifstream in(spec.init_checkpoint, std::ios::binary);
      if (!in) throw std::runtime_error("cannot open checkpoint: " + spec.init_checkpoint);
      agent = load_agent(in, spec.agent, mix_seed(spec.seed, kAgentStream));
      agent.a_max = env_cfg.a_max;
    }
  }
  ReplayBuffer buffer(spec.agent.buffer_capacity);

  TrainLog log;
  long global_step = 0;
  long next_eval = spec.train.eval_period;
  int episode = 0;

  auto run_eval = [&](long at_step) {
    const std::uint64_t base = mix_seed(mix_seed(spec.seed, kEvalStream),
                                        static_cast<std::uint64_t>(at_step));
    const EvalResult r = evaluate(spec.mode, spec.env, ctrl_cfg, learns ? &agent : nullptr,
                                  spec.train.eval_episodes, base);
    EvalRecord rec{at_step, r.success_rate, r.mean_return, spec.train.eval_episodes};
    log.evals.push_back(rec);
    if (sink) sink->write(to_json(rec));
  };

  try {
    Eigen::MatrixXd bs, bu, bs2;
    Eigen::VectorXd br, bdone;
    while (global_step < spec.train.total_steps) {
      Obs obs = env.reset(mix_seed(spec.seed, mix_seed(kEpisodeStream, episode)));
      controller.reset();
      double ep_return = 0.0;
      bool ep_success = false;
      int ep_len = 0;

      for (int t = 0; t < env_cfg.horizon; ++t) {
        Action u_rl{0.0, 0.0};
        if (learns) {
          u_rl = select_action(agent, obs, /*explore=*/true,
                               /*warmup=*/global_step < spec.agent.warmup_steps);
        }
        Action u_h{0.0, 0.0};
        if (spec.mode != RunMode::kPureRl) u_h = controller.act(obs);
        const Action u_exec = compose(u_rl, u_h, env_cfg.a_max);

        const StepResult res = env.step(u_exec);
        if (!std::isfinite(res.reward)) throw std::runtime_error("non-finite reward");

        if (learns) {
          buffer.store(Transition{obs, u_rl, res.reward, res.observation, res.done});
          if (global_step >= spec.agent.warmup_steps &&
              buffer.size() >= static_cast<std::size_t>(spec.agent.batch_size)) {
            buffer.sample_batch(spec.agent.batch_size, agent.rng, &bs, &bu, &br, &bs2, &bdone);
            update_critics(agent, bs, bu, br, bs2, bdone);
            agent.update_count += 1;
            if (agent.update_count % spec.agent.policy_delay == 0) {
              update_actor_and_targets(agent, bs);
            }
          }
        }

        ep_return += res.reward;
        ep_len += 1;
        global_step += 1;
        if (spec.train.log_steps) {
          StepRecord sr{global_step, episode, res.reward, u_exec, u_rl};
          log.steps.push_back(sr);
          if (sink) sink->write(to_json(sr));
        }
        obs = res.observation;
        if (global_step == next_eval) {
          run_eval(global_step);
          next_eval += spec.train.eval_period;
        }
        if (res.done) {
          ep_success = res.success;
          break;
        }
      }

      EpisodeRecord er{episode,
                       global_step,
                       ep_return,
                       ep_success,
                       env.world().left_block.tilt,
                       env.world().right_block.tilt,
                       ep_len};
      log.episodes.push_back(er);
      if (sink) sink->write(to_json(er));
      episode += 1;
    }
  } catch (const std::exception& e) {
    log.aborted = true;
    log.abort_reason = e.what();
    if (sink) {
      sink->write({{"type", "abort"}, {"reason", log.abort_reason}, {"step", global_step}});
    }
  }

  if (!log.aborted && (log.evals.empty() || log.evals.back().step != global_step)) {
    run_eval(global_step);
  }
  if (sink) {
    sink->write({{"type", "summary"},
                 {"mode", run_mode_name(spec.mode)},
                 {"seed", spec.seed},
                 {"total_steps", global_step},
                 {"episodes", episode},
                 {"aborted", log.aborted},
                 {"final_success_rate", log.evals.empty() ? 0.0 : log.evals.back().success_rate},
                 {"final_mean_return", log.evals.empty() ? 0.0 : log.evals.back().mean_return}});
  }
  if (agent_out && learns) *agent_out = std::move(agent);
  if (buffer_out && learns) *buffer_out = std::move(buffer);
  return log;
}

}  // namespace resrl
