#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "rlbd/agent.hpp"
#include "rlbd/env.hpp"
#include "rlbd/rng.hpp"

using namespace rlbd;

namespace {

// Central-difference gradient of the per-sample loss wrt every parameter.
// The value target is frozen at the caller's number, exactly as the
// analytic gradient treats it.
std::vector<double> fd_parameter_gradient(PolicyModel model,
                                          const std::vector<double>& obs,
                                          int action, double advantage,
                                          double target, double entropy_coef,
                                          double eps) {
  std::vector<double> base = model.parameters();
  std::vector<double> g(base.size(), 0.0);
  for (size_t i = 0; i < base.size(); ++i) {
    std::vector<double> th = base;
    th[i] = base[i] + eps;
    model.set_parameters(th);
    double up = model.sample_loss(obs, action, advantage, target, entropy_coef);
    th[i] = base[i] - eps;
    model.set_parameters(th);
    double dn = model.sample_loss(obs, action, advantage, target, entropy_coef);
    g[i] = (up - dn) / (2.0 * eps);
  }
  return g;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double max_abs(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::fabs(v));
  return m;
}

std::vector<double> random_obs(int n, Rng& rng) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.uniform();
  return x;
}

}  // namespace

TEST_CASE("parameter gradient matches central differences") {
  Rng rng(derive_seed(11, "fd"));
  for (int hidden : {4, 8, 16}) {
    AgentConfig cfg;
    cfg.n_inputs = 6;
    cfg.n_actions = 3;
    cfg.hidden = hidden;
    PolicyModel model(cfg, rng);
    for (int rep = 0; rep < 8; ++rep) {
      std::vector<double> obs = random_obs(cfg.n_inputs, rng);
      int action = rng.uniform_int(cfg.n_actions);
      double adv = rng.uniform(-2.0, 2.0);
      double ce = (rep % 2 == 0) ? 0.0 : 0.01;
      double target = model.value(obs) + adv;
      std::vector<double> analytic =
          model.sample_gradient(obs, action, adv, ce);
      std::vector<double> fd = fd_parameter_gradient(model, obs, action, adv,
                                                     target, ce, 1e-5);
      double scale = std::max(max_abs(fd), 1e-8);
      CHECK(max_abs_diff(analytic, fd) / scale < 1e-4);
    }
  }
}

TEST_CASE("input gradient matches central differences on the nll") {
  Rng rng(derive_seed(12, "fd-input"));
  AgentConfig cfg;
  cfg.n_inputs = 9;
  cfg.n_actions = 4;
  cfg.hidden = 12;
  PolicyModel model(cfg, rng);
  for (int rep = 0; rep < 6; ++rep) {
    std::vector<double> obs = random_obs(cfg.n_inputs, rng);
    int target = rng.uniform_int(cfg.n_actions);
    std::vector<double> analytic = model.input_gradient(obs, target);
    REQUIRE(static_cast<int>(analytic.size()) == cfg.n_inputs);
    std::vector<double> fd(obs.size());
    const double eps = 1e-6;
    for (size_t j = 0; j < obs.size(); ++j) {
      std::vector<double> x = obs;
      x[j] = obs[j] + eps;
      double up = model.action_nll(x, target);
      x[j] = obs[j] - eps;
      double dn = model.action_nll(x, target);
      fd[j] = (up - dn) / (2.0 * eps);
    }
    double scale = std::max(max_abs(fd), 1e-8);
    CHECK(max_abs_diff(analytic, fd) / scale < 1e-4);
  }
}

TEST_CASE("zero parameters give a uniform policy and zero value") {
  Rng rng(derive_seed(13, "zero"));
  AgentConfig cfg;
  cfg.n_inputs = 5;
  cfg.n_actions = 4;
  cfg.hidden = 7;
  PolicyModel model(cfg, rng);
  model.set_parameters(std::vector<double>(model.n_parameters(), 0.0));
  std::vector<double> obs = random_obs(cfg.n_inputs, rng);
  std::vector<double> p = model.policy(obs);
  REQUIRE(p.size() == 4);
  for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(model.value(obs) == 0.0);
}

TEST_CASE("zero advantage yields an exactly zero gradient") {
  Rng rng(derive_seed(14, "zero-adv"));
  AgentConfig cfg;
  cfg.n_inputs = 8;
  cfg.n_actions = 3;
  cfg.hidden = 10;
  PolicyModel model(cfg, rng);
  std::vector<double> obs = random_obs(cfg.n_inputs, rng);
  std::vector<double> g = model.sample_gradient(obs, 1, 0.0, 0.0);
  for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("gradient is linear in the advantage when entropy is off") {
  Rng rng(derive_seed(15, "linear"));
  AgentConfig cfg;
  cfg.n_inputs = 8;
  cfg.n_actions = 3;
  cfg.hidden = 10;
  PolicyModel model(cfg, rng);
  std::vector<double> obs = random_obs(cfg.n_inputs, rng);
  std::vector<double> g1 = model.sample_gradient(obs, 2, 0.7, 0.0);
  std::vector<double> g2 = model.sample_gradient(obs, 2, 1.4, 0.0);
  REQUIRE(g1.size() == g2.size());
  for (size_t i = 0; i < g1.size(); ++i) {
    CHECK(g2[i] == doctest::Approx(2.0 * g1[i]).epsilon(1e-12));
  }
}

TEST_CASE("parameter count follows the layer shapes") {
  Rng rng(derive_seed(16, "count"));
  AgentConfig cfg;
  cfg.n_inputs = 64;
  cfg.n_actions = 4;
  cfg.hidden = 32;
  PolicyModel model(cfg, rng);
  // W1 + b1 + W2 + b2 + w3 + b3
  CHECK(model.n_parameters() == 32 * 64 + 32 + 4 * 32 + 4 + 32 + 1);
}

TEST_CASE("extreme logits stay finite") {
  Rng rng(derive_seed(17, "finite"));
  AgentConfig cfg;
  cfg.n_inputs = 4;
  cfg.n_actions = 3;
  cfg.hidden = 5;
  PolicyModel model(cfg, rng);
  std::vector<double> th = model.parameters();
  for (double& v : th) v *= 1e3;
  model.set_parameters(th);
  std::vector<double> obs = random_obs(cfg.n_inputs, rng);
  std::vector<double> p = model.policy(obs);
  double sum = 0.0;
  for (double v : p) {
    CHECK(std::isfinite(v));
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::isfinite(model.action_nll(obs, 0)));
  std::vector<double> g = model.sample_gradient(obs, 0, 1.0, 0.01);
  for (double v : g) CHECK(std::isfinite(v));
}

TEST_CASE("updates clip the gradient norm") {
  Rng rng(derive_seed(18, "clip"));
  AgentConfig cfg;
  cfg.n_inputs = 6;
  cfg.n_actions = 3;
  cfg.hidden = 8;
  cfg.lr = 1.0;
  cfg.grad_clip = 0.01;
  PolicyModel model(cfg, rng);
  std::vector<double> before = model.parameters();
  std::vector<double> obs = random_obs(cfg.n_inputs, rng);
  std::vector<double> next = random_obs(cfg.n_inputs, rng);
  model.update(obs, 1, 5.0, next, false);
  std::vector<double> after = model.parameters();
  double norm2 = 0.0;
  for (size_t i = 0; i < after.size(); ++i) {
    double d = after[i] - before[i];
    norm2 += d * d;
  }
  // step length is at most lr * clip
  CHECK(std::sqrt(norm2) <= cfg.lr * cfg.grad_clip + 1e-12);
}

TEST_CASE("checkpoints reload bit-identically") {
  Rng rng(derive_seed(19, "ckpt"));
  AgentConfig cfg;
  cfg.n_inputs = 16;
  cfg.n_actions = 4;
  cfg.hidden = 6;
  PolicyModel model(cfg, rng);
  // a few updates so parameters are not at init
  for (int i = 0; i < 20; ++i) {
    std::vector<double> obs = random_obs(cfg.n_inputs, rng);
    std::vector<double> next = random_obs(cfg.n_inputs, rng);
    model.update(obs, rng.uniform_int(cfg.n_actions), rng.uniform(-1.0, 1.0),
                 next, i % 5 == 0);
  }
  auto path = std::filesystem::temp_directory_path() / "rlbd_agent_ckpt.txt";
  model.save(path.string());
  PolicyModel back = PolicyModel::load(path.string());
  std::filesystem::remove(path);

  REQUIRE(back.n_parameters() == model.n_parameters());
  const std::vector<double>& a = model.parameters();
  const std::vector<double>& b = back.parameters();
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

  // identical action stream from identical rng streams
  Rng ra(derive_seed(19, "act"));
  Rng rb(derive_seed(19, "act"));
  for (int i = 0; i < 50; ++i) {
    std::vector<double> obs = random_obs(cfg.n_inputs, rng);
    CHECK(model.act(obs, ra) == back.act(obs, rb));
  }
}

TEST_CASE("one-step actor-critic learns the three-state chain") {
  Env env = make_env("chain3", {});
  Rng rng(derive_seed(20, "chain"));
  AgentConfig cfg;
  cfg.n_inputs = env.obs_rows * env.obs_cols;
  cfg.n_actions = env.mdp.n_actions;
  cfg.hidden = 16;
  cfg.lr = 0.05;
  PolicyModel model(cfg, rng);

  Rng walker(derive_seed(20, "walker"));
  const int horizon = env.mdp.horizon;
  int steps = 0;
  while (steps < 20000) {
    int s = sample_categorical(env.mdp.init_dist.data(), env.mdp.n_states,
                               walker);
    for (int t = 0; t <= horizon; ++t) {
      std::vector<double> obs = env.observe(s).pixels;
      int a = model.act(obs, walker);
      double r = env.mdp.r(s, a);
      int s2 = sample_categorical(env.mdp.p_row(s, a), env.mdp.n_states,
                                  walker);
      bool done = (t == horizon);
      std::vector<double> next = env.observe(s2).pixels;
      model.update(obs, a, r, next, done);
      s = s2;
      ++steps;
    }
  }

  // greedy rollouts should be essentially optimal (value 1.0)
  Rng eval_rng(derive_seed(20, "eval"));
  EvalResult res = evaluate_policy(
      env.mdp,
      [&](int, int s, Rng&) {
        return model.greedy_action(env.observe(s).pixels);
      },
      200, eval_rng);
  CHECK(res.mean >= 0.95);
}
