#pragma once

#include <array>
#include <cstdint>

#include "resrl/physics.hpp"
#include "resrl/rng.hpp"

namespace resrl {

inline constexpr int kObsDim = 11;

// Flat observation: [gripper x, gripper z, contact force z, left tilt,
// right tilt, left x, right x, held x, held z, goal x, goal z].
using Obs = std::array<double, kObsDim>;

struct Action {
  double dx = 0.0;
  double dz = 0.0;
};

// Actuation noise drawn per component and added to every executed command,
// in units of the action bound.
struct NoiseParams {
  double bias = 0.0;   // mu
  double sigma = 0.0;  // std
  std::uint64_t seed = 0;
};

struct RewardParams {
  enum class Variant { kSim, kExtended };
  double lambda = 1.0;  // standing-block tilt weight
  double mu_w = 10.0;   // standing-block displacement weight (extended only)
  double beta = 1.0;    // standing-block yaw weight (extended only)
  Variant variant = Variant::kSim;
};

struct EnvConfig {
  PhysicsParams physics;
  RewardParams reward;
  NoiseParams noise;
  double a_max = 0.005;
  int horizon = 200;
  double rotation_range = 0.0;
  RotationMode rotation_mode = RotationMode::kUniform;
  double pos_tol = 0.005;
  double tilt_tol = 0.010;

  void validate() const;
};

struct StepResult {
  Obs observation{};
  double reward = 0.0;
  bool done = false;
  bool success = false;
};

Obs observe(const WorldState& world, const PhysicsParams& p);

// Distance-to-goal plus tilt penalty, non-positive, zero only at the goal
// configuration with both blocks upright.
double reward_sim(const WorldState& world, const PhysicsParams& p, const RewardParams& r);

// reward_sim terms computed on the end-effector position, plus penalties on
// standing-block displacement and yaw.
double reward_extended(const WorldState& world, const PhysicsParams& p, const RewardParams& r);

class Env {
 public:
  explicit Env(const EnvConfig& cfg);

  // Starts a fresh episode; the standing-block tilts are drawn from the
  // configured variation with this seed.
  Obs reset(std::uint64_t seed);

  // Executes clip(action + noise) and advances the world. Throws on
  // non-finite actions and on stepping a finished episode.
  StepResult step(const Action& action);

  const WorldState& world() const { return world_; }
  const EnvConfig& config() const { return cfg_; }
  bool done() const { return done_; }
  Obs observation() const { return observe(world_, cfg_.physics); }

 private:
  double base_reward() const;

  EnvConfig cfg_;
  WorldState world_;
  Rng noise_rng_;
  bool done_ = true;
};

}  // namespace resrl
