#include "resrl/td3.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace resrl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer: zero capacity");
  data_.reserve(std::min<std::size_t>(capacity, 1 << 20));
}

void ReplayBuffer::store(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
  } else {
    data_[cursor_] = t;  // overwrite oldest
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
  if (data_.empty()) throw std::logic_error("replay buffer: sampling while empty");
  return data_[static_cast<std::size_t>(
      rng.uniform_int(0, static_cast<std::int64_t>(data_.size()) - 1))];
}

void ReplayBuffer::sample_batch(int n, Rng& rng, Eigen::MatrixXd* s, Eigen::MatrixXd* u,
                                Eigen::VectorXd* r, Eigen::MatrixXd* s2,
                                Eigen::VectorXd* done) const {
  if (data_.empty()) throw std::logic_error("replay buffer: sampling while empty");
  s->resize(kObsDim, n);
  u->resize(2, n);
  r->resize(n);
  s2->resize(kObsDim, n);
  done->resize(n);
  for (int j = 0; j < n; ++j) {
    const Transition& t = data_[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(data_.size()) - 1))];
    for (int i = 0; i < kObsDim; ++i) {
      (*s)(i, j) = t.s[i];
      (*s2)(i, j) = t.s2[i];
    }
    (*u)(0, j) = t.u.dx;
    (*u)(1, j) = t.u.dz;
    (*r)(j) = t.r;
    (*done)(j) = t.done ? 1.0 : 0.0;
  }
}

void TD3Config::validate() const {
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("td3: gamma outside [0,1)");
  if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("td3: tau outside (0,1]");
  if (policy_delay < 1) throw std::invalid_argument("td3: policy_delay must be >= 1");
  if (target_noise_std < 0.0 || target_noise_clip < 0.0 || exploration_std < 0.0) {
    throw std::invalid_argument("td3: noise scales must be >= 0");
  }
  if (batch_size < 1) throw std::invalid_argument("td3: batch_size must be >= 1");
  if (actor_lr <= 0.0 || critic_lr <= 0.0) throw std::invalid_argument("td3: bad learning rate");
  if (warmup_steps < 0) throw std::invalid_argument("td3: warmup_steps must be >= 0");
  if (buffer_capacity == 0) throw std::invalid_argument("td3: zero buffer capacity");
}

Eigen::VectorXd obs_to_vec(const Obs& s) {
  Eigen::VectorXd v(kObsDim);
  for (int i = 0; i < kObsDim; ++i) v(i) = s[i];
  return v;
}

Eigen::VectorXd obs_feature_scale() {
  Eigen::VectorXd scale(kObsDim);
  // positions ~0.1 m, contact force ~10 N, tilts ~0.5 rad
  scale << 10.0, 10.0, 0.1, 2.0, 2.0, 10.0, 10.0, 10.0, 10.0, 10.0, 10.0;
  return scale;
}

TD3Agent make_agent(const TD3Config& cfg, double a_max, std::uint64_t seed) {
  cfg.validate();
  if (a_max <= 0.0) throw std::invalid_argument("td3: a_max must be positive");
  TD3Agent a;
  a.cfg = cfg;
  a.a_max = a_max;
  a.rng = Rng(seed);

  std::vector<int> actor_sizes{kObsDim};
  actor_sizes.insert(actor_sizes.end(), cfg.actor_hidden.begin(), cfg.actor_hidden.end());
  actor_sizes.push_back(2);
  std::vector<int> critic_sizes{kObsDim + 2};
  critic_sizes.insert(critic_sizes.end(), cfg.critic_hidden.begin(), cfg.critic_hidden.end());
  critic_sizes.push_back(1);

  a.actor = make_mlp(actor_sizes, OutputActivation::kTanhScaled, 1.0, a.rng,
                     /*zero_final_layer=*/true);
  a.critic1 = make_mlp(critic_sizes, OutputActivation::kLinear, 1.0, a.rng);
  a.critic2 = make_mlp(critic_sizes, OutputActivation::kLinear, 1.0, a.rng);
  a.actor_target = a.actor;
  a.critic1_target = a.critic1;
  a.critic2_target = a.critic2;
  a.actor_opt = make_adam(a.actor, cfg.actor_lr);
  a.critic1_opt = make_adam(a.critic1, cfg.critic_lr);
  a.critic2_opt = make_adam(a.critic2, cfg.critic_lr);
  return a;
}

void polyak_update(Mlp& target, const Mlp& live, double tau) {
  for (int l = 0; l < live.layer_count(); ++l) {
    target.w[l] = tau * live.w[l] + (1.0 - tau) * target.w[l];
    target.b[l] = tau * live.b[l] + (1.0 - tau) * target.b[l];
  }
}

namespace {

Eigen::MatrixXd concat_state_action(const Eigen::MatrixXd& s, const Eigen::MatrixXd& u) {
  Eigen::MatrixXd x(s.rows() + u.rows(), s.cols());
  x.topRows(s.rows()) = s;
  x.bottomRows(u.rows()) = u;
  return x;
}

}  // namespace

namespace {

Eigen::MatrixXd scale_obs(const Eigen::MatrixXd& s) {
  static const Eigen::VectorXd scale = obs_feature_scale();
  return scale.asDiagonal() * s;
}

}  // namespace

Eigen::VectorXd compute_target(TD3Agent& agent, const Eigen::MatrixXd& s2,
                               const Eigen::VectorXd& r, const Eigen::VectorXd& done) {
  const int n = static_cast<int>(s2.cols());
  if (n == 0) throw std::invalid_argument("compute_target: empty batch");
  const Eigen::MatrixXd s2n = scale_obs(s2);
  // Target policy smoothing in units of the action bound.
  Eigen::MatrixXd a2 = forward(agent.actor_target, s2n);
  const double std = agent.cfg.target_noise_std;
  const double clip = agent.cfg.target_noise_clip;
  if (std > 0.0) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < 2; ++i) {
        const double eps = std::clamp(agent.rng.normal(0.0, std), -clip, clip);
        a2(i, j) += eps;
      }
    }
  }
  a2 = a2.cwiseMax(-1.0).cwiseMin(1.0);
  const Eigen::MatrixXd x2 = concat_state_action(s2n, a2);
  const Eigen::VectorXd q1 = forward(agent.critic1_target, x2).row(0);
  const Eigen::VectorXd q2 = forward(agent.critic2_target, x2).row(0);
  const Eigen::VectorXd qmin = q1.cwiseMin(q2);
  return r.array() + agent.cfg.gamma * (1.0 - done.array()) * qmin.array();
}

std::pair<double, double> update_critics(TD3Agent& agent, const Eigen::MatrixXd& s,
                                         const Eigen::MatrixXd& u, const Eigen::VectorXd& r,
                                         const Eigen::MatrixXd& s2,
                                         const Eigen::VectorXd& done) {
  const int n = static_cast<int>(s.cols());
  const Eigen::VectorXd y = compute_target(agent, s2, r, done);  // constant target
  const Eigen::MatrixXd x = concat_state_action(scale_obs(s), u / agent.a_max);
  std::pair<double, double> losses;
  Mlp* critics[2] = {&agent.critic1, &agent.critic2};
  AdamState* opts[2] = {&agent.critic1_opt, &agent.critic2_opt};
  for (int k = 0; k < 2; ++k) {
    ForwardCache cache;
    const Eigen::VectorXd pred = forward(*critics[k], x, &cache).row(0);
    const Eigen::VectorXd err = pred - y;
    const double loss = err.squaredNorm() / n;
    if (!std::isfinite(loss)) throw std::runtime_error("td3: non-finite critic loss");
    (k == 0 ? losses.first : losses.second) = loss;
    const Eigen::MatrixXd dy = (2.0 / n) * err.transpose();
    Gradients grads;
    backward(*critics[k], cache, dy, &grads);
    adam_step(*critics[k], grads, *opts[k]);
  }
  return losses;
}

double update_actor_and_targets(TD3Agent& agent, const Eigen::MatrixXd& s) {
  const int n = static_cast<int>(s.cols());
  if (n == 0) throw std::invalid_argument("update_actor: empty batch");
  const Eigen::MatrixXd sn = scale_obs(s);
  ForwardCache actor_cache;
  const Eigen::MatrixXd a = forward(agent.actor, sn, &actor_cache);
  ForwardCache critic_cache;
  const Eigen::MatrixXd x = concat_state_action(sn, a);
  const Eigen::MatrixXd q = forward(agent.critic1, x, &critic_cache);
  const double objective = -q.mean();
  // Ascend Q: gradient of -mean(Q) w.r.t. the action block of the critic input.
  const Eigen::MatrixXd dy = Eigen::MatrixXd::Constant(1, n, -1.0 / n);
  const Eigen::MatrixXd dx = backward(agent.critic1, critic_cache, dy, nullptr);
  const Eigen::MatrixXd da = dx.bottomRows(2);
  Gradients grads;
  backward(agent.actor, actor_cache, da, &grads);
  adam_step(agent.actor, grads, agent.actor_opt);

  polyak_update(agent.actor_target, agent.actor, agent.cfg.tau);
  polyak_update(agent.critic1_target, agent.critic1, agent.cfg.tau);
  polyak_update(agent.critic2_target, agent.critic2, agent.cfg.tau);
  return objective;
}

Action select_action(TD3Agent& agent, const Obs& s, bool explore, bool warmup) {
  if (explore && warmup) {
    const double dx = agent.rng.uniform(-agent.a_max, agent.a_max);
    const double dz = agent.rng.uniform(-agent.a_max, agent.a_max);
    return Action{dx, dz};
  }
  const Eigen::VectorXd out =
      forward1(agent.actor, obs_feature_scale().cwiseProduct(obs_to_vec(s)));
  double dx = agent.a_max * out(0);
  double dz = agent.a_max * out(1);
  if (explore && agent.cfg.exploration_std > 0.0) {
    const double std = agent.cfg.exploration_std * agent.a_max;
    dx += agent.rng.normal(0.0, std);
    dz += agent.rng.normal(0.0, std);
  }
  dx = std::clamp(dx, -agent.a_max, agent.a_max);
  dz = std::clamp(dz, -agent.a_max, agent.a_max);
  return Action{dx, dz};
}

namespace {
constexpr std::uint32_t kAgentMagic = 0x54443341;  // "TD3A"
}

void save_agent(const TD3Agent& agent, const std::string& tag, std::ostream& out) {
  out.write(reinterpret_cast<const char*>(&kAgentMagic), sizeof(kAgentMagic));
  const std::uint32_t len = static_cast<std::uint32_t>(tag.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(tag.data(), len);
  out.write(reinterpret_cast<const char*>(&agent.a_max), sizeof(agent.a_max));
  out.write(reinterpret_cast<const char*>(&agent.update_count), sizeof(agent.update_count));
  for (const Mlp* net : {&agent.actor, &agent.critic1, &agent.critic2, &agent.actor_target,
                         &agent.critic1_target, &agent.critic2_target}) {
    save_mlp(*net, out);
  }
  if (!out) throw std::runtime_error("agent save: write failed");
}

TD3Agent load_agent(std::istream& in, const TD3Config& cfg, std::uint64_t seed,
                    std::string* tag) {
  std::uint32_t magic = 0;
  in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  if (!in || magic != kAgentMagic) throw std::runtime_error("agent load: bad magic");
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > 4096) throw std::runtime_error("agent load: bad tag");
  std::string t(len, '\0');
  in.read(t.data(), len);
  double a_max = 0.0;
  long update_count = 0;
  in.read(reinterpret_cast<char*>(&a_max), sizeof(a_max));
  in.read(reinterpret_cast<char*>(&update_count), sizeof(update_count));
  if (!in) throw std::runtime_error("agent load: truncated header");

  TD3Agent fresh = make_agent(cfg, a_max, seed);
  Mlp* nets[6] = {&fresh.actor,        &fresh.critic1,        &fresh.critic2,
                  &fresh.actor_target, &fresh.critic1_target, &fresh.critic2_target};
  for (Mlp* net : nets) {
    Mlp loaded = load_mlp(in);
    if (loaded.layer_count() != net->layer_count() ||
        loaded.input_dim() != net->input_dim() || loaded.output_dim() != net->output_dim()) {
      throw std::runtime_error("agent load: checkpoint dimensions do not match the config");
    }
    for (int l = 0; l < loaded.layer_count(); ++l) {
      if (loaded.w[l].rows() != net->w[l].rows() || loaded.w[l].cols() != net->w[l].cols()) {
        throw std::runtime_error("agent load: checkpoint dimensions do not match the config");
      }
    }
    *net = std::move(loaded);
  }
  fresh.update_count = update_count;
  if (tag) *tag = std::move(t);
  return fresh;
}

}  // namespace resrl
