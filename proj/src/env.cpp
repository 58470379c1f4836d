#include "resrl/env.hpp"

#include <cmath>
#include <stdexcept>

namespace resrl {

void EnvConfig::validate() const {
  physics.validate();
  if (a_max <= 0.0) throw std::invalid_argument("env: a_max must be positive");
  if (horizon < 1) throw std::invalid_argument("env: horizon must be >= 1");
  if (reward.lambda < 0.0 || reward.mu_w < 0.0 || reward.beta < 0.0) {
    throw std::invalid_argument("env: reward weights must be >= 0");
  }
  if (noise.sigma < 0.0) throw std::invalid_argument("env: noise sigma must be >= 0");
  if (pos_tol <= 0.0 || tilt_tol <= 0.0) {
    throw std::invalid_argument("env: success tolerances must be positive");
  }
  if (rotation_range < 0.0 || rotation_range >= physics.tilt_critical) {
    throw std::invalid_argument("env: rotation_range outside [0, tilt_critical)");
  }
}

Obs observe(const WorldState& w, const PhysicsParams& p) {
  return Obs{w.gripper.x_pos,        w.gripper.z_pos, w.gripper.contact_force_z,
             w.left_block.tilt,      w.right_block.tilt, w.left_block.x_pos,
             w.right_block.x_pos,    w.gripper.x_pos, w.gripper.z_pos,
             p.goal_x,               p.goal_z};
}

double reward_sim(const WorldState& w, const PhysicsParams& p, const RewardParams& r) {
  const double dx = p.goal_x - w.gripper.x_pos;
  const double dz = p.goal_z - w.gripper.z_pos;
  const double dist = std::sqrt(dx * dx + dz * dz);
  const double tilts = std::abs(w.left_block.tilt) + std::abs(w.right_block.tilt);
  return -dist - r.lambda * tilts;
}

double reward_extended(const WorldState& w, const PhysicsParams& p, const RewardParams& r) {
  const double base = reward_sim(w, p, r);
  const double dl = w.left_block.x_pos - p.left_nominal_x();
  const double dr = w.right_block.x_pos - p.right_nominal_x();
  const double block_dist = std::sqrt(dl * dl + dr * dr);
  const double yaws = std::abs(w.left_block.yaw) + std::abs(w.right_block.yaw);
  return base - r.mu_w * block_dist - r.beta * yaws;
}

Env::Env(const EnvConfig& cfg) : cfg_(cfg), noise_rng_(cfg.noise.seed) {
  cfg_.validate();
}

Obs Env::reset(std::uint64_t seed) {
  world_ = reset_world(seed, cfg_.rotation_range, cfg_.rotation_mode, cfg_.physics);
  done_ = false;
  return observation();
}

double Env::base_reward() const {
  return cfg_.reward.variant == RewardParams::Variant::kSim
             ? reward_sim(world_, cfg_.physics, cfg_.reward)
             : reward_extended(world_, cfg_.physics, cfg_.reward);
}

StepResult Env::step(const Action& action) {
  if (done_) throw std::logic_error("env: step() after the episode finished");
  if (!std::isfinite(action.dx) || !std::isfinite(action.dz)) {
    throw std::runtime_error("env: non-finite action");
  }
  double dx = action.dx;
  double dz = action.dz;
  if (cfg_.noise.sigma != 0.0 || cfg_.noise.bias != 0.0) {
    dx += cfg_.a_max * noise_rng_.normal(cfg_.noise.bias, cfg_.noise.sigma);
    dz += cfg_.a_max * noise_rng_.normal(cfg_.noise.bias, cfg_.noise.sigma);
  }
  dx = std::min(std::max(dx, -cfg_.a_max), cfg_.a_max);
  dz = std::min(std::max(dz, -cfg_.a_max), cfg_.a_max);

  const bool was_toppled = world_.left_block.toppled || world_.right_block.toppled;
  world_ = step_world(world_, dx, dz, cfg_.physics);

  const bool toppled = world_.left_block.toppled || world_.right_block.toppled;
  const bool success = is_success(world_, cfg_.physics, cfg_.pos_tol, cfg_.tilt_tol);

  double reward = base_reward();
  if (toppled && !was_toppled) {
    // A toppled block is absorbing: charge the tilt penalty it would accrue
    // for the rest of the horizon so ending early is never a discount.
    double fallen = 0.0;
    if (world_.left_block.toppled) fallen += std::abs(world_.left_block.tilt);
    if (world_.right_block.toppled) fallen += std::abs(world_.right_block.tilt);
    const int remaining = cfg_.horizon - world_.step_count;
    if (remaining > 0) reward -= cfg_.reward.lambda * fallen * remaining;
  }

  done_ = success || toppled || world_.step_count >= cfg_.horizon;
  return StepResult{observation(), reward, done_, success};
}

}  // namespace resrl
