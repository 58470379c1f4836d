#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "resrl/env.hpp"
#include "resrl/nn.hpp"

namespace resrl {

// Twin delayed deterministic-policy-gradient agent: twin critics trained on
// the clipped-double-Q target with smoothed target actions, a delayed actor,
// and slowly tracking target copies.

// The stored action is the residual policy's own output (with exploration
// noise), never the executed superposition.
struct Transition {
  Obs s{};
  Action u;
  double r = 0.0;
  Obs s2{};
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void store(const Transition& t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return data_[i]; }

  const Transition& sample(Rng& rng) const;

  // Uniformly sampled minibatch laid out one sample per column.
  void sample_batch(int n, Rng& rng, Eigen::MatrixXd* s, Eigen::MatrixXd* u,
                    Eigen::VectorXd* r, Eigen::MatrixXd* s2, Eigen::VectorXd* done) const;

 private:
  std::vector<Transition> data_;
  std::size_t capacity_;
  std::size_t cursor_ = 0;
};

// Noise scales are in units of the action bound.
struct TD3Config {
  double gamma = 0.99;
  double tau = 0.005;
  int policy_delay = 2;
  double target_noise_std = 0.1;
  double target_noise_clip = 0.25;
  double exploration_std = 0.1;
  int batch_size = 128;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  int warmup_steps = 500;
  std::size_t buffer_capacity = 100000;
  std::vector<int> actor_hidden{64, 64};
  std::vector<int> critic_hidden{64, 64};

  void validate() const;
};

struct TD3Agent {
  TD3Config cfg;
  double a_max = 0.005;
  Mlp actor, critic1, critic2;
  Mlp actor_target, critic1_target, critic2_target;
  AdamState actor_opt, critic1_opt, critic2_opt;
  long update_count = 0;
  Rng rng{0};
};

// Fresh agent. The actor's final layer starts at zero so the untrained
// policy outputs exactly zero.
TD3Agent make_agent(const TD3Config& cfg, double a_max, std::uint64_t seed);

void polyak_update(Mlp& target, const Mlp& live, double tau);

// y = r + (1 - done) * gamma * min(Q1', Q2')(s', clip(pi'(s') + clipped noise)).
Eigen::VectorXd compute_target(TD3Agent& agent, const Eigen::MatrixXd& s2,
                               const Eigen::VectorXd& r, const Eigen::VectorXd& done);

// One Adam step per critic against the shared target; returns both losses.
// Throws when a loss goes non-finite.
std::pair<double, double> update_critics(TD3Agent& agent, const Eigen::MatrixXd& s,
                                         const Eigen::MatrixXd& u, const Eigen::VectorXd& r,
                                         const Eigen::MatrixXd& s2, const Eigen::VectorXd& done);

// Delayed step: ascend mean Q1(s, pi(s)) through the critic's input gradient,
// then move every target net by tau toward its live net. Returns the actor
// objective (negated mean Q).
double update_actor_and_targets(TD3Agent& agent, const Eigen::MatrixXd& s);

// Deterministic policy action; with explore, exploration noise is added (or,
// during warmup, the action is uniform in the bounds).
Action select_action(TD3Agent& agent, const Obs& s, bool explore, bool warmup);

Eigen::VectorXd obs_to_vec(const Obs& s);

// Fixed per-entry scaling that brings observations to O(1) for the networks.
// Actions enter the networks in units of the action bound. Constant scales
// keep runs bit-reproducible.
Eigen::VectorXd obs_feature_scale();

// Checkpoints hold a caller tag, the action bound and all six networks plus
// the update counter; optimizer state restarts fresh on load.
void save_agent(const TD3Agent& agent, const std::string& tag, std::ostream& out);
TD3Agent load_agent(std::istream& in, const TD3Config& cfg, std::uint64_t seed,
                    std::string* tag = nullptr);

}  // namespace resrl
