#include <doctest.h>

#include <cmath>
#include <sstream>

#include "resrl/td3.hpp"

using namespace resrl;

namespace {

TD3Config small_cfg() {
  TD3Config cfg;
  cfg.batch_size = 8;
  cfg.warmup_steps = 0;
  cfg.buffer_capacity = 1000;
  cfg.actor_hidden = {16, 16};
  cfg.critic_hidden = {16, 16};
  return cfg;
}

Transition make_transition(Rng& rng, double r, bool done) {
  Transition t;
  for (int i = 0; i < kObsDim; ++i) {
    t.s[i] = rng.uniform(-0.1, 0.1);
    t.s2[i] = rng.uniform(-0.1, 0.1);
  }
  t.u = Action{rng.uniform(-0.005, 0.005), rng.uniform(-0.005, 0.005)};
  t.r = r;
  t.done = done;
  return t;
}

// Replaces a critic by a fixed-output network: Q(s,u) = constant.
void set_constant_net(Mlp& net, double value) {
  for (int l = 0; l < net.layer_count(); ++l) {
    net.w[l].setZero();
    net.b[l].setZero();
  }
  net.b.back()(0) = value;
}

}  // namespace

TEST_CASE("ring buffer: store, wrap and overwrite semantics") {
  ReplayBuffer buf(4);
  Rng rng(1);
  buf.store(make_transition(rng, 0.0, false));
  CHECK(buf.size() == 1);
  for (int i = 1; i < 4; ++i) buf.store(make_transition(rng, static_cast<double>(i), false));
  CHECK(buf.size() == 4);
  // One more store overwrites the oldest entry (reward 0).
  buf.store(make_transition(rng, 99.0, false));
  CHECK(buf.size() == 4);
  bool found_zero = false;
  for (std::size_t i = 0; i < buf.size(); ++i) found_zero |= buf.at(i).r == 0.0;
  CHECK_FALSE(found_zero);
}

TEST_CASE("ring buffer: uniform sampling passes a chi-square test") {
  ReplayBuffer buf(10);
  Rng fill(2);
  for (int i = 0; i < 10; ++i) buf.store(make_transition(fill, static_cast<double>(i), false));
  Rng rng(31337);
  int counts[10] = {0};
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    counts[static_cast<int>(buf.sample(rng).r)] += 1;
  }
  double chi2 = 0.0;
  const double expect = draws / 10.0;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  // 9 degrees of freedom at the 0.01 significance level.
  CHECK(chi2 < 21.67);
}

TEST_CASE("compute_target: gamma 0 reduces to the reward") {
  TD3Config cfg = small_cfg();
  cfg.gamma = 0.0;
  TD3Agent agent = make_agent(cfg, 0.005, 42);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Random(kObsDim, 5);
  Eigen::VectorXd r(5);
  r << 1.0, -2.0, 0.5, 3.0, -0.25;
  Eigen::VectorXd done = Eigen::VectorXd::Zero(5);
  const Eigen::VectorXd y = compute_target(agent, s2, r, done);
  CHECK((y - r).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("compute_target: done cuts the bootstrap") {
  TD3Config cfg = small_cfg();
  cfg.gamma = 0.9;
  cfg.target_noise_std = 0.0;
  TD3Agent agent = make_agent(cfg, 0.005, 42);
  set_constant_net(agent.critic1_target, 5.0);
  set_constant_net(agent.critic2_target, 7.0);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(kObsDim, 2);
  Eigen::VectorXd r(2);
  r << 1.0, 1.0;
  Eigen::VectorXd done(2);
  done << 1.0, 0.0;
  const Eigen::VectorXd y = compute_target(agent, s2, r, done);
  CHECK(y(0) == doctest::Approx(1.0));
  CHECK(y(1) == doctest::Approx(1.0 + 0.9 * 5.0));
}

TEST_CASE("compute_target: hand-computed twin-minimum backup") {
  TD3Config cfg = small_cfg();
  cfg.gamma = 0.5;
  cfg.target_noise_std = 0.0;  // smoothing off for the hand case
  TD3Agent agent = make_agent(cfg, 0.005, 7);
  set_constant_net(agent.critic1_target, 2.0);
  set_constant_net(agent.critic2_target, 3.0);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(kObsDim, 1);
  Eigen::VectorXd r(1);
  r << 1.0;
  Eigen::VectorXd done = Eigen::VectorXd::Zero(1);
  const Eigen::VectorXd y = compute_target(agent, s2, r, done);
  // y = r + gamma * min(Q1', Q2') = 1 + 0.5 * 2 = 2, exact.
  CHECK(std::abs(y(0) - 2.0) < 1e-12);
}

TEST_CASE("twin-critic pessimism: the target never exceeds either single backup") {
  TD3Config cfg = small_cfg();
  TD3Agent agent = make_agent(cfg, 0.005, 11);
  Rng rng(3);
  Eigen::MatrixXd s2(kObsDim, 32);
  for (int j = 0; j < 32; ++j) {
    for (int i = 0; i < kObsDim; ++i) s2(i, j) = rng.uniform(-0.2, 0.2);
  }
  const Eigen::VectorXd r = Eigen::VectorXd::Zero(32);
  const Eigen::VectorXd done = Eigen::VectorXd::Zero(32);

  // Freeze the smoothing noise by turning it off: the pessimism property is
  // about the minimum, not the noise.
  agent.cfg.target_noise_std = 0.0;
  const Eigen::VectorXd y = compute_target(agent, s2, r, done);
  const Eigen::MatrixXd s2n = obs_feature_scale().asDiagonal() * s2;
  const Eigen::MatrixXd a2 = forward(agent.actor_target, s2n);
  Eigen::MatrixXd x2(kObsDim + 2, 32);
  x2.topRows(kObsDim) = s2n;
  x2.bottomRows(2) = a2;
  const Eigen::VectorXd q1 = forward(agent.critic1_target, x2).row(0);
  const Eigen::VectorXd q2 = forward(agent.critic2_target, x2).row(0);
  for (int j = 0; j < 32; ++j) {
    CHECK(y(j) <= agent.cfg.gamma * q1(j) + 1e-12);
    CHECK(y(j) <= agent.cfg.gamma * q2(j) + 1e-12);
  }
}

TEST_CASE("update_critics: repeated updates on one transition fit the target") {
  TD3Config cfg = small_cfg();
  cfg.gamma = 0.0;  // fixed target: y = r
  cfg.batch_size = 1;
  TD3Agent agent = make_agent(cfg, 0.005, 21);
  Rng rng(5);
  const Transition t = make_transition(rng, 1.5, false);
  Eigen::MatrixXd s = obs_to_vec(t.s);
  Eigen::MatrixXd u(2, 1);
  u << t.u.dx, t.u.dz;
  Eigen::VectorXd r(1);
  r << t.r;
  Eigen::MatrixXd s2 = obs_to_vec(t.s2);
  Eigen::VectorXd done(1);
  done << 0.0;

  double loss1 = 0.0;
  for (int i = 0; i < 3000; ++i) {
    loss1 = update_critics(agent, s, u, r, s2, done).first;
  }
  CHECK(loss1 < 1e-6);
  Eigen::MatrixXd x(kObsDim + 2, 1);
  x.topRows(kObsDim) = obs_feature_scale().asDiagonal() * s;
  x.bottomRows(2) = u / agent.a_max;
  CHECK(std::abs(forward(agent.critic1, x)(0, 0) - 1.5) < 1e-3);
  CHECK(std::abs(forward(agent.critic2, x)(0, 0) - 1.5) < 1e-3);
}

TEST_CASE("update_critics: loss trends down on a fixed batch") {
  TD3Config cfg = small_cfg();
  cfg.gamma = 0.0;
  TD3Agent agent = make_agent(cfg, 0.005, 33);
  Rng rng(6);
  ReplayBuffer buf(64);
  for (int i = 0; i < 64; ++i) buf.store(make_transition(rng, rng.uniform(-2.0, 0.0), false));
  Eigen::MatrixXd s, u, s2;
  Eigen::VectorXd r, done;
  Rng sample_rng(7);
  buf.sample_batch(32, sample_rng, &s, &u, &r, &s2, &done);

  double first = 0.0, last = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double loss = update_critics(agent, s, u, r, s2, done).first;
    if (i == 0) first = loss;
    last = loss;
  }
  CHECK(last < first);
}

TEST_CASE("critics already fitting the target barely move") {
  TD3Config cfg = small_cfg();
  cfg.gamma = 0.0;
  cfg.batch_size = 1;
  TD3Agent agent = make_agent(cfg, 0.005, 52);
  set_constant_net(agent.critic1, 2.0);
  set_constant_net(agent.critic2, 2.0);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(kObsDim, 1);
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(2, 1);
  Eigen::VectorXd r(1);
  r << 2.0;  // exactly the critic output
  Eigen::VectorXd done = Eigen::VectorXd::Zero(1);
  const auto losses = update_critics(agent, s, u, r, Eigen::MatrixXd::Zero(kObsDim, 1), done);
  CHECK(losses.first == doctest::Approx(0.0));
  CHECK(std::abs(agent.critic1.b.back()(0) - 2.0) < 1e-9);
}

TEST_CASE("polyak: tau 1 copies, tau 0 freezes, decay follows (1-tau)^k") {
  Rng rng(8);
  Mlp live = make_mlp({3, 4, 1}, OutputActivation::kLinear, 1.0, rng);
  Mlp target = make_mlp({3, 4, 1}, OutputActivation::kLinear, 1.0, rng);

  SUBCASE("tau 1") {
    polyak_update(target, live, 1.0);
    for (int l = 0; l < live.layer_count(); ++l) {
      CHECK((target.w[l] - live.w[l]).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("tau 0") {
    const Mlp before = target;
    polyak_update(target, live, 0.0);
    for (int l = 0; l < live.layer_count(); ++l) {
      CHECK((target.w[l] - before.w[l]).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("geometric decay toward a frozen live net") {
    const double tau = 0.05;
    const int k = 40;
    const double gap0 = (target.w[0] - live.w[0]).cwiseAbs().maxCoeff();
    Eigen::MatrixXd diff0 = target.w[0] - live.w[0];
    for (int i = 0; i < k; ++i) polyak_update(target, live, tau);
    const Eigen::MatrixXd want = std::pow(1.0 - tau, k) * diff0;
    CHECK(((target.w[0] - live.w[0]) - want).cwiseAbs().maxCoeff() < 1e-9 * (1.0 + gap0));
  }
}

TEST_CASE("actor update drives the policy to a quadratic critic's optimum") {
  TD3Config cfg = small_cfg();
  cfg.actor_lr = 3e-3;
  TD3Agent agent = make_agent(cfg, 1.0, 99);  // action bound 1 so 0.3 is reachable

  // Hand-built critic: hinge interpolation of Q(s, u) = -(u_x - 0.3)^2 with a
  // knot exactly at 0.3, so its maximizer is 0.3 by construction.
  const double delta = 0.05;
  const int knots = 53;  // -1.0 .. 1.6
  Mlp critic;
  critic.out_act = OutputActivation::kLinear;
  Eigen::MatrixXd w1 = Eigen::MatrixXd::Zero(knots + 2, kObsDim + 2);
  Eigen::VectorXd b1(knots + 2);
  const double h0 = -1.0;
  for (int k = 0; k < knots; ++k) {
    w1(k, kObsDim) = 1.0;
    b1(k) = -(h0 + delta * k);
  }
  w1(knots, kObsDim) = 1.0;       // relu(u)
  w1(knots + 1, kObsDim) = -1.0;  // relu(-u)
  b1(knots) = 0.0;
  b1(knots + 1) = 0.0;
  const double s0 = -2.0 * (h0 - 0.5 * delta - 0.3);  // segment slope before h0
  Eigen::MatrixXd w2 = Eigen::MatrixXd::Zero(1, knots + 2);
  for (int k = 0; k < knots; ++k) w2(0, k) = -2.0 * delta;  // concave kinks
  w2(0, knots) = s0;
  w2(0, knots + 1) = -s0;
  Eigen::VectorXd b2(1);
  b2(0) = -(h0 - 0.3) * (h0 - 0.3) - s0 * h0;
  critic.w = {w1, w2};
  critic.b = {b1, b2};
  // Sanity: the critic reproduces the parabola at the knots.
  Eigen::MatrixXd probe = Eigen::MatrixXd::Zero(kObsDim + 2, 1);
  probe(kObsDim, 0) = 0.3;
  REQUIRE(std::abs(forward(critic, probe)(0, 0)) < 1e-12);
  probe(kObsDim, 0) = -0.5;
  REQUIRE(forward(critic, probe)(0, 0) == doctest::Approx(-0.64));

  agent.critic1 = critic;
  agent.critic1_target = critic;
  agent.cfg.tau = 0.0;  // keep targets out of the picture
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(kObsDim, 16);
  for (int it = 0; it < 3000; ++it) update_actor_and_targets(agent, s);
  const Eigen::MatrixXd a = forward(agent.actor, s);
  CHECK(std::abs(a(0, 0) - 0.3) < 1e-2);
}

TEST_CASE("select_action: deterministic without exploration, bounded always") {
  TD3Config cfg = small_cfg();
  TD3Agent agent = make_agent(cfg, 0.005, 17);
  Obs s{};
  for (int i = 0; i < kObsDim; ++i) s[i] = 0.01 * i;
  const Action a = select_action(agent, s, false, false);
  const Action b = select_action(agent, s, false, false);
  CHECK(a.dx == b.dx);
  CHECK(a.dz == b.dz);
  CHECK(std::abs(a.dx) <= 0.005);

  SUBCASE("zero-initialized final layer means a near-zero policy") {
    CHECK(a.dx == 0.0);
    CHECK(a.dz == 0.0);
  }
}

TEST_CASE("select_action: warmup explores uniformly, exploration noise has the right std") {
  TD3Config cfg = small_cfg();
  cfg.exploration_std = 0.1;
  TD3Agent agent = make_agent(cfg, 0.005, 18);
  Obs s{};

  double sum = 0.0, sum_sq = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const Action a = select_action(agent, s, true, false);  // zero actor + noise
    sum += a.dx;
    sum_sq += a.dx * a.dx;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum_sq / n - mean * mean);
  CHECK(std::abs(sd - 0.1 * 0.005) < 0.05 * 0.1 * 0.005);

  // Warmup draws cover the bounds uniformly (std of U[-a,a] is a/sqrt(3)).
  sum = sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const Action a = select_action(agent, s, true, true);
    sum += a.dx;
    sum_sq += a.dx * a.dx;
  }
  const double warm_sd = std::sqrt(sum_sq / n - (sum / n) * (sum / n));
  CHECK(std::abs(warm_sd - 0.005 / std::sqrt(3.0)) < 0.05 * 0.005);
}

TEST_CASE("agent checkpoint: dimensions are validated on load") {
  TD3Config cfg = small_cfg();
  TD3Agent agent = make_agent(cfg, 0.005, 23);
  std::stringstream buf;
  save_agent(agent, "residual", buf);

  SUBCASE("round trip preserves parameters and the tag") {
    std::string tag;
    TD3Agent loaded = load_agent(buf, cfg, 5, &tag);
    CHECK(tag == "residual");
    CHECK(loaded.update_count == agent.update_count);
    for (int l = 0; l < agent.actor.layer_count(); ++l) {
      CHECK((loaded.actor.w[l] - agent.actor.w[l]).cwiseAbs().maxCoeff() == 0.0);
    }
  }
  SUBCASE("mismatched architecture is rejected") {
    TD3Config other = cfg;
    other.actor_hidden = {8};
    CHECK_THROWS(load_agent(buf, other, 5));
  }
}

TEST_CASE("off-policy purity: identical batches give identical updates") {
  TD3Config cfg = small_cfg();
  Rng rng(40);
  Eigen::MatrixXd s(kObsDim, 8), u(2, 8), s2(kObsDim, 8);
  Eigen::VectorXd r(8), done(8);
  for (int j = 0; j < 8; ++j) {
    for (int i = 0; i < kObsDim; ++i) {
      s(i, j) = rng.uniform(-0.1, 0.1);
      s2(i, j) = rng.uniform(-0.1, 0.1);
    }
    u(0, j) = rng.uniform(-0.005, 0.005);
    u(1, j) = rng.uniform(-0.005, 0.005);
    r(j) = rng.uniform(-1.0, 0.0);
    done(j) = 0.0;
  }
  TD3Agent a = make_agent(cfg, 0.005, 77);
  TD3Agent b = make_agent(cfg, 0.005, 77);
  for (int i = 0; i < 5; ++i) {
    update_critics(a, s, u, r, s2, done);
    update_critics(b, s, u, r, s2, done);
    update_actor_and_targets(a, s);
    update_actor_and_targets(b, s);
  }
  for (int l = 0; l < a.actor.layer_count(); ++l) {
    CHECK((a.actor.w[l] - b.actor.w[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.critic1.w[l] - b.critic1.w[l]).cwiseAbs().maxCoeff() == 0.0);
  }
}
