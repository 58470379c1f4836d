#include "resrl/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <stdexcept>

namespace resrl {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::invalid_argument("config: " + path + ": " + what);
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

// Unknown keys are a hard error so a typo cannot silently fall back to a default.
void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& path) {
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) fail(path + "." + item.key(), "unknown key");
  }
}

double get_num(const json& j, const std::string& key, double dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number()) fail(path + "." + key, "expected a number");
  return j[key].get<double>();
}

int get_int(const json& j, const std::string& key, int dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number_integer()) fail(path + "." + key, "expected an integer");
  return j[key].get<int>();
}

bool get_bool(const json& j, const std::string& key, bool dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_boolean()) fail(path + "." + key, "expected a boolean");
  return j[key].get<bool>();
}

std::string get_str(const json& j, const std::string& key, const std::string& dflt,
                    const std::string& path) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_string()) fail(path + "." + key, "expected a string");
  return j[key].get<std::string>();
}

PhysicsParams parse_physics(const json& j) {
  const std::string path = "physics";
  require_object(j, path);
  check_keys(j,
             {"block_width", "block_height", "corner_chamfer", "gap_width", "held_width",
              "held_height", "goal_x", "goal_z", "friction_threshold", "tilt_critical",
              "tilt_restore_rate", "contact_stiffness", "block_weight", "tilt_compliance",
              "slide_compliance", "dt", "max_step_displacement", "penetration_tol", "start_x",
              "start_z", "x_min", "x_max", "z_max"},
             path);
  PhysicsParams p;
  p.block_width = get_num(j, "block_width", p.block_width, path);
  p.block_height = get_num(j, "block_height", p.block_height, path);
  p.corner_chamfer = get_num(j, "corner_chamfer", p.corner_chamfer, path);
  p.gap_width = get_num(j, "gap_width", p.gap_width, path);
  p.held_width = get_num(j, "held_width", p.held_width, path);
  p.held_height = get_num(j, "held_height", p.held_height, path);
  p.goal_x = get_num(j, "goal_x", p.goal_x, path);
  p.goal_z = get_num(j, "goal_z", p.goal_z, path);
  p.friction_threshold = get_num(j, "friction_threshold", p.friction_threshold, path);
  p.tilt_critical = get_num(j, "tilt_critical", p.tilt_critical, path);
  p.tilt_restore_rate = get_num(j, "tilt_restore_rate", p.tilt_restore_rate, path);
  p.contact_stiffness = get_num(j, "contact_stiffness", p.contact_stiffness, path);
  p.block_weight = get_num(j, "block_weight", p.block_weight, path);
  p.tilt_compliance = get_num(j, "tilt_compliance", p.tilt_compliance, path);
  p.slide_compliance = get_num(j, "slide_compliance", p.slide_compliance, path);
  p.dt = get_num(j, "dt", p.dt, path);
  p.max_step_displacement = get_num(j, "max_step_displacement", p.max_step_displacement, path);
  p.penetration_tol = get_num(j, "penetration_tol", p.penetration_tol, path);
  p.start_x = get_num(j, "start_x", p.start_x, path);
  p.start_z = get_num(j, "start_z", p.start_z, path);
  p.x_min = get_num(j, "x_min", p.x_min, path);
  p.x_max = get_num(j, "x_max", p.x_max, path);
  p.z_max = get_num(j, "z_max", p.z_max, path);
  return p;
}

EnvConfig parse_env(const json& j, const PhysicsParams& physics) {
  const std::string path = "env";
  require_object(j, path);
  check_keys(j,
             {"a_max", "horizon", "rotation_range", "rotation_mode", "pos_tol", "tilt_tol",
              "reward", "noise"},
             path);
  EnvConfig e;
  e.physics = physics;
  e.a_max = get_num(j, "a_max", e.a_max, path);
  e.horizon = get_int(j, "horizon", e.horizon, path);
  e.rotation_range = get_num(j, "rotation_range", e.rotation_range, path);
  const std::string mode = get_str(j, "rotation_mode", "uniform", path);
  if (mode == "uniform") {
    e.rotation_mode = RotationMode::kUniform;
  } else if (mode == "discrete3") {
    e.rotation_mode = RotationMode::kDiscrete3;
  } else {
    fail(path + ".rotation_mode", "expected uniform or discrete3");
  }
  e.pos_tol = get_num(j, "pos_tol", e.pos_tol, path);
  e.tilt_tol = get_num(j, "tilt_tol", e.tilt_tol, path);
  if (j.contains("reward")) {
    const json& r = j["reward"];
    require_object(r, path + ".reward");
    check_keys(r, {"lambda", "mu_w", "beta", "variant"}, path + ".reward");
    e.reward.lambda = get_num(r, "lambda", e.reward.lambda, path + ".reward");
    e.reward.mu_w = get_num(r, "mu_w", e.reward.mu_w, path + ".reward");
    e.reward.beta = get_num(r, "beta", e.reward.beta, path + ".reward");
    const std::string variant = get_str(r, "variant", "sim", path + ".reward");
    if (variant == "sim") {
      e.reward.variant = RewardParams::Variant::kSim;
    } else if (variant == "extended") {
      e.reward.variant = RewardParams::Variant::kExtended;
    } else {
      fail(path + ".reward.variant", "expected sim or extended");
    }
  }
  if (j.contains("noise")) {
    const json& n = j["noise"];
    require_object(n, path + ".noise");
    check_keys(n, {"bias", "sigma"}, path + ".noise");
    e.noise.bias = get_num(n, "bias", e.noise.bias, path + ".noise");
    e.noise.sigma = get_num(n, "sigma", e.noise.sigma, path + ".noise");
  }
  return e;
}

PControllerParams parse_controller(const json& j, double a_max) {
  const std::string path = "controller";
  require_object(j, path);
  check_keys(j, {"k_p", "waypoint_tol", "hover_z"}, path);
  PControllerParams c;
  c.k_p = get_num(j, "k_p", c.k_p, path);
  c.waypoint_tol = get_num(j, "waypoint_tol", c.waypoint_tol, path);
  c.hover_z = get_num(j, "hover_z", c.hover_z, path);
  c.a_max = a_max;
  return c;
}

std::vector<int> get_int_list(const json& j, const std::string& key,
                              const std::vector<int>& dflt, const std::string& path) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_array()) fail(path + "." + key, "expected an array of integers");
  std::vector<int> out;
  for (const auto& v : j[key]) {
    if (!v.is_number_integer()) fail(path + "." + key, "expected an array of integers");
    out.push_back(v.get<int>());
  }
  return out;
}

TD3Config parse_agent(const json& j) {
  const std::string path = "agent";
  require_object(j, path);
  check_keys(j,
             {"gamma", "tau", "policy_delay", "target_noise_std", "target_noise_clip",
              "exploration_std", "batch_size", "actor_lr", "critic_lr", "warmup_steps",
              "buffer_capacity", "actor_hidden", "critic_hidden"},
             path);
  TD3Config a;
  a.gamma = get_num(j, "gamma", a.gamma, path);
  a.tau = get_num(j, "tau", a.tau, path);
  a.policy_delay = get_int(j, "policy_delay", a.policy_delay, path);
  a.target_noise_std = get_num(j, "target_noise_std", a.target_noise_std, path);
  a.target_noise_clip = get_num(j, "target_noise_clip", a.target_noise_clip, path);
  a.exploration_std = get_num(j, "exploration_std", a.exploration_std, path);
  a.batch_size = get_int(j, "batch_size", a.batch_size, path);
  a.actor_lr = get_num(j, "actor_lr", a.actor_lr, path);
  a.critic_lr = get_num(j, "critic_lr", a.critic_lr, path);
  a.warmup_steps = get_int(j, "warmup_steps", a.warmup_steps, path);
  a.buffer_capacity = static_cast<std::size_t>(
      get_int(j, "buffer_capacity", static_cast<int>(a.buffer_capacity), path));
  a.actor_hidden = get_int_list(j, "actor_hidden", a.actor_hidden, path);
  a.critic_hidden = get_int_list(j, "critic_hidden", a.critic_hidden, path);
  return a;
}

TrainConfig parse_train(const json& j) {
  const std::string path = "train";
  require_object(j, path);
  check_keys(j, {"total_steps", "eval_period", "eval_episodes", "log_steps"}, path);
  TrainConfig t;
  t.total_steps = get_int(j, "total_steps", t.total_steps, path);
  t.eval_period = get_int(j, "eval_period", t.eval_period, path);
  t.eval_episodes = get_int(j, "eval_episodes", t.eval_episodes, path);
  t.log_steps = get_bool(j, "log_steps", t.log_steps, path);
  return t;
}

const std::set<std::string> kKinds = {"sample_efficiency", "variation_sweep", "noise_sweep",
                                      "bias_sweep", "transfer"};

// Variation sweeps in uniform mode stay on the documented grid.
const std::vector<double> kUniformRotations = {0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};

void validate_experiment(const ExperimentConfig& cfg) {
  if (!kKinds.count(cfg.kind)) fail("experiment.kind", "unknown experiment: " + cfg.kind);
  if (cfg.seeds.empty()) fail("experiment.seeds", "need at least one seed");
  if (cfg.workers < 0) fail("experiment.workers", "must be >= 0");
  if (cfg.final_eval_episodes < 1) fail("experiment.final_eval_episodes", "must be >= 1");
  if (cfg.kind == "variation_sweep") {
    if (cfg.sweep.empty()) fail("experiment.sweep", "variation_sweep needs sweep values");
    for (double r : cfg.sweep) {
      if (cfg.env.rotation_mode == RotationMode::kUniform) {
        bool known = false;
        for (double k : kUniformRotations) known = known || std::abs(r - k) < 1e-9;
        if (!known) fail("experiment.sweep", "rotation outside the documented grid");
      } else if (r < 0.0 || r >= cfg.env.physics.tilt_critical) {
        fail("experiment.sweep", "rotation outside [0, tilt_critical)");
      }
    }
  } else if (cfg.kind == "noise_sweep") {
    if (cfg.sweep.empty()) fail("experiment.sweep", "noise_sweep needs sigma values");
    for (double s : cfg.sweep) {
      if (s < 0.0 || s > 0.1 + 1e-9) fail("experiment.sweep", "sigma outside [0, 0.1]");
    }
    if (cfg.env.noise.bias != 0.0) fail("env.noise.bias", "noise_sweep fixes bias = 0");
  } else if (cfg.kind == "bias_sweep") {
    if (cfg.sweep.empty()) fail("experiment.sweep", "bias_sweep needs bias values");
    for (double m : cfg.sweep) {
      if (m < 0.0 || m > 0.2 + 1e-9) fail("experiment.sweep", "bias outside [0, 0.2]");
    }
    if (std::abs(cfg.env.noise.sigma - 0.05) > 1e-12) {
      fail("env.noise.sigma", "bias_sweep fixes sigma = 0.05");
    }
  } else if (cfg.kind == "transfer") {
    if (!cfg.target_overrides.is_object() || cfg.target_overrides.empty()) {
      fail("experiment.target_overrides", "transfer needs a target environment");
    }
    if (!cfg.sweep.empty()) fail("experiment.sweep", "transfer takes no sweep");
  } else if (!cfg.sweep.empty()) {
    fail("experiment.sweep", cfg.kind + " takes no sweep");
  }
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
  require_object(doc, "<root>");
  check_keys(doc, {"experiment", "physics", "env", "controller", "agent", "train"}, "<root>");

  ExperimentConfig cfg;
  cfg.document = doc;
  const PhysicsParams physics =
      doc.contains("physics") ? parse_physics(doc["physics"]) : PhysicsParams{};
  cfg.env = doc.contains("env") ? parse_env(doc["env"], physics) : EnvConfig{};
  if (!doc.contains("env")) cfg.env.physics = physics;
  cfg.controller = doc.contains("controller")
                       ? parse_controller(doc["controller"], cfg.env.a_max)
                       : PControllerParams{};
  cfg.controller.a_max = cfg.env.a_max;
  cfg.agent = doc.contains("agent") ? parse_agent(doc["agent"]) : TD3Config{};
  cfg.train = doc.contains("train") ? parse_train(doc["train"]) : TrainConfig{};

  if (doc.contains("experiment")) {
    const json& e = doc["experiment"];
    require_object(e, "experiment");
    check_keys(e,
               {"kind", "seeds", "out_dir", "sweep", "workers", "final_eval_episodes",
                "target_overrides"},
               "experiment");
    cfg.kind = get_str(e, "kind", "", "experiment");
    if (e.contains("seeds")) {
      if (!e["seeds"].is_array()) fail("experiment.seeds", "expected an array");
      for (const auto& s : e["seeds"]) {
        if (!s.is_number_integer() || s.get<long long>() < 0) {
          fail("experiment.seeds", "seeds must be non-negative integers");
        }
        cfg.seeds.push_back(s.get<std::uint64_t>());
      }
    }
    cfg.out_dir = get_str(e, "out_dir", cfg.out_dir, "experiment");
    if (e.contains("sweep")) {
      if (!e["sweep"].is_array()) fail("experiment.sweep", "expected an array of numbers");
      for (const auto& v : e["sweep"]) {
        if (!v.is_number()) fail("experiment.sweep", "expected an array of numbers");
        cfg.sweep.push_back(v.get<double>());
      }
    }
    cfg.workers = get_int(e, "workers", cfg.workers, "experiment");
    cfg.final_eval_episodes =
        get_int(e, "final_eval_episodes", cfg.final_eval_episodes, "experiment");
    if (e.contains("target_overrides")) cfg.target_overrides = e["target_overrides"];
  }

  cfg.env.validate();
  cfg.controller.validate();
  cfg.agent.validate();
  cfg.train.validate();
  if (!cfg.kind.empty() || !cfg.seeds.empty()) validate_experiment(cfg);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  return parse_config(doc);
}

nlohmann::json merge_overrides(nlohmann::json base, const nlohmann::json& overrides) {
  if (!overrides.is_object() || !base.is_object()) return overrides;
  for (const auto& item : overrides.items()) {
    if (base.contains(item.key()) && base[item.key()].is_object() && item.value().is_object()) {
      base[item.key()] = merge_overrides(base[item.key()], item.value());
    } else {
      base[item.key()] = item.value();
    }
  }
  return base;
}

RunSpec make_run_spec(const ExperimentConfig& cfg, RunMode mode, std::uint64_t seed) {
  RunSpec spec;
  spec.mode = mode;
  spec.env = cfg.env;
  spec.controller = cfg.controller;
  spec.agent = cfg.agent;
  spec.train = cfg.train;
  spec.seed = seed;
  return spec;
}

}  // namespace resrl
