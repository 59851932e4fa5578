#include "rlbd/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "rlbd/mdp.hpp"

namespace rlbd {

namespace {

void check_config(const AgentConfig& cfg) {
  if (cfg.n_inputs < 1) throw std::invalid_argument("agent: n_inputs < 1");
  if (cfg.n_actions < 2) throw std::invalid_argument("agent: n_actions < 2");
  if (cfg.hidden < 1) throw std::invalid_argument("agent: hidden < 1");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("agent: lr must be > 0");
  if (!(cfg.grad_clip > 0.0)) {
    throw std::invalid_argument("agent: grad_clip must be > 0");
  }
}

std::string fmt_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

PolicyModel::PolicyModel(const AgentConfig& cfg, Rng& rng) : cfg_(cfg) {
  check_config(cfg_);
  const int n = cfg_.n_inputs, h = cfg_.hidden, A = cfg_.n_actions;
  theta_.assign(static_cast<size_t>(h) * n + h + static_cast<size_t>(A) * h +
                    A + h + 1,
                0.0);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(n));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
  for (int i = 0; i < h * n; ++i) theta_[w1() + i] = rng.uniform(-s1, s1);
  for (int i = 0; i < A * h; ++i) theta_[w2() + i] = rng.uniform(-s2, s2);
  for (int i = 0; i < h; ++i) theta_[w3() + i] = rng.uniform(-s2, s2);
}

PolicyModel::Forward PolicyModel::forward(const std::vector<double>& obs) const {
  const int n = cfg_.n_inputs, h = cfg_.hidden, A = cfg_.n_actions;
  if (static_cast<int>(obs.size()) != n) {
    throw std::invalid_argument("agent: observation size mismatch");
  }
  Forward f;
  f.h1.resize(h);
  for (int i = 0; i < h; ++i) {
    double z = theta_[b1() + i];
    const double* row = &theta_[w1() + i * n];
    for (int j = 0; j < n; ++j) z += row[j] * obs[j];
    f.h1[i] = std::tanh(z);
  }
  f.logits.resize(A);
  for (int a = 0; a < A; ++a) {
    double z = theta_[b2() + a];
    const double* row = &theta_[w2() + a * h];
    for (int i = 0; i < h; ++i) z += row[i] * f.h1[i];
    f.logits[a] = z;
  }
  double m = f.logits[0];
  for (double z : f.logits) m = std::max(m, z);
  double sum = 0.0;
  for (double z : f.logits) sum += std::exp(z - m);
  const double lse = m + std::log(sum);
  f.logp.resize(A);
  f.p.resize(A);
  for (int a = 0; a < A; ++a) {
    f.logp[a] = f.logits[a] - lse;
    f.p[a] = std::exp(f.logp[a]);
  }
  f.v = theta_[b3()];
  for (int i = 0; i < h; ++i) f.v += theta_[w3() + i] * f.h1[i];
  return f;
}

std::vector<double> PolicyModel::policy(const std::vector<double>& obs) const {
  return forward(obs).p;
}

double PolicyModel::value(const std::vector<double>& obs) const {
  return forward(obs).v;
}

int PolicyModel::act(const std::vector<double>& obs, Rng& rng) const {
  Forward f = forward(obs);
  return sample_categorical(f.p.data(), cfg_.n_actions, rng);
}

int PolicyModel::greedy_action(const std::vector<double>& obs) const {
  Forward f = forward(obs);
  int best = 0;
  for (int a = 1; a < cfg_.n_actions; ++a) {
    if (f.logits[a] > f.logits[best]) best = a;
  }
  return best;
}

double PolicyModel::action_nll(const std::vector<double>& obs,
                               int action) const {
  if (action < 0 || action >= cfg_.n_actions) {
    throw std::invalid_argument("agent: action out of range");
  }
  return -forward(obs).logp[action];
}

double PolicyModel::sample_loss(const std::vector<double>& obs, int action,
                                double advantage, double target,
                                double entropy_coef) const {
  Forward f = forward(obs);
  double entropy = 0.0;
  for (int a = 0; a < cfg_.n_actions; ++a) entropy -= f.p[a] * f.logp[a];
  double resid = f.v - target;
  return -f.logp[action] * advantage + cfg_.value_coef * resid * resid -
         entropy_coef * entropy;
}

std::vector<double> PolicyModel::sample_gradient(const std::vector<double>& obs,
                                                 int action, double advantage,
                                                 double entropy_coef) const {
  const int n = cfg_.n_inputs, h = cfg_.hidden, A = cfg_.n_actions;
  if (action < 0 || action >= A) {
    throw std::invalid_argument("agent: action out of range");
  }
  Forward f = forward(obs);
  double entropy = 0.0;
  for (int a = 0; a < A; ++a) entropy -= f.p[a] * f.logp[a];

  // heads; the value target is frozen at v + advantage
  std::vector<double> dlogits(A);
  for (int a = 0; a < A; ++a) {
    dlogits[a] = advantage * (f.p[a] - (a == action ? 1.0 : 0.0)) +
                 entropy_coef * f.p[a] * (f.logp[a] + entropy);
  }
  const double dv = -2.0 * cfg_.value_coef * advantage;

  std::vector<double> g(theta_.size(), 0.0);
  for (int a = 0; a < A; ++a) {
    double* row = &g[w2() + a * h];
    for (int i = 0; i < h; ++i) row[i] = dlogits[a] * f.h1[i];
    g[b2() + a] = dlogits[a];
  }
  for (int i = 0; i < h; ++i) g[w3() + i] = dv * f.h1[i];
  g[b3()] = dv;

  // back through the tanh layer
  for (int i = 0; i < h; ++i) {
    double dh = theta_[w3() + i] * dv;
    for (int a = 0; a < A; ++a) dh += theta_[w2() + a * h + i] * dlogits[a];
    double dz = dh * (1.0 - f.h1[i] * f.h1[i]);
    double* row = &g[w1() + i * n];
    for (int j = 0; j < n; ++j) row[j] = dz * obs[j];
    g[b1() + i] = dz;
  }
  return g;
}

std::vector<double> PolicyModel::input_gradient(const std::vector<double>& obs,
                                                int target_action) const {
  const int n = cfg_.n_inputs, h = cfg_.hidden, A = cfg_.n_actions;
  if (target_action < 0 || target_action >= A) {
    throw std::invalid_argument("agent: action out of range");
  }
  Forward f = forward(obs);
  std::vector<double> dlogits(A);
  for (int a = 0; a < A; ++a) {
    dlogits[a] = f.p[a] - (a == target_action ? 1.0 : 0.0);
  }
  std::vector<double> dx(n, 0.0);
  for (int i = 0; i < h; ++i) {
    double dh = 0.0;
    for (int a = 0; a < A; ++a) dh += theta_[w2() + a * h + i] * dlogits[a];
    double dz = dh * (1.0 - f.h1[i] * f.h1[i]);
    const double* row = &theta_[w1() + i * n];
    for (int j = 0; j < n; ++j) dx[j] += row[j] * dz;
  }
  return dx;
}

double PolicyModel::update(const std::vector<double>& obs, int action,
                           double reward, const std::vector<double>& next_obs,
                           bool done) {
  const double target = reward + (done ? 0.0 : value(next_obs));
  const double advantage = target - value(obs);
  std::vector<double> g =
      sample_gradient(obs, action, advantage, cfg_.entropy_coef);
  double norm2 = 0.0;
  for (double v : g) norm2 += v * v;
  const double norm = std::sqrt(norm2);
  const double scale =
      norm > cfg_.grad_clip ? cfg_.grad_clip / norm : 1.0;
  for (size_t i = 0; i < theta_.size(); ++i) {
    theta_[i] -= cfg_.lr * scale * g[i];
  }
  return advantage;
}

void PolicyModel::set_parameters(std::vector<double> theta) {
  if (theta.size() != theta_.size()) {
    throw std::invalid_argument("agent: parameter vector size mismatch");
  }
  theta_ = std::move(theta);
}

void PolicyModel::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("agent: cannot open " + path);
  f << "model-format 1\n";
  f << "n_inputs " << cfg_.n_inputs << "\n";
  f << "n_actions " << cfg_.n_actions << "\n";
  f << "hidden " << cfg_.hidden << "\n";
  f << "lr " << fmt_exact(cfg_.lr) << "\n";
  f << "value_coef " << fmt_exact(cfg_.value_coef) << "\n";
  f << "entropy_coef " << fmt_exact(cfg_.entropy_coef) << "\n";
  f << "grad_clip " << fmt_exact(cfg_.grad_clip) << "\n";
  f << "parameters " << theta_.size() << "\n";
  for (size_t i = 0; i < theta_.size(); ++i) {
    f << fmt_exact(theta_[i]) << ((i + 1) % 8 == 0 ? "\n" : " ");
  }
  f << "\n";
  if (!f) throw std::runtime_error("agent: write failed for " + path);
}

PolicyModel PolicyModel::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("agent: cannot open " + path);
  auto expect = [&f, &path](const std::string& kw) {
    std::string tok;
    if (!(f >> tok) || tok != kw) {
      throw std::invalid_argument("agent: expected '" + kw + "' in " + path);
    }
  };
  expect("model-format");
  int version = 0;
  if (!(f >> version) || version != 1) {
    throw std::invalid_argument("agent: unsupported model format");
  }
  PolicyModel m;
  expect("n_inputs");
  f >> m.cfg_.n_inputs;
  expect("n_actions");
  f >> m.cfg_.n_actions;
  expect("hidden");
  f >> m.cfg_.hidden;
  expect("lr");
  f >> m.cfg_.lr;
  expect("value_coef");
  f >> m.cfg_.value_coef;
  expect("entropy_coef");
  f >> m.cfg_.entropy_coef;
  expect("grad_clip");
  f >> m.cfg_.grad_clip;
  expect("parameters");
  size_t count = 0;
  f >> count;
  if (!f) throw std::invalid_argument("agent: malformed checkpoint header");
  check_config(m.cfg_);
  const size_t expected =
      static_cast<size_t>(m.cfg_.hidden) * m.cfg_.n_inputs + m.cfg_.hidden +
      static_cast<size_t>(m.cfg_.n_actions) * m.cfg_.hidden +
      m.cfg_.n_actions + m.cfg_.hidden + 1;
  if (count != expected) {
    throw std::invalid_argument("agent: checkpoint parameter count mismatch");
  }
  m.theta_.resize(count);
  for (double& v : m.theta_) {
    if (!(f >> v)) {
      throw std::invalid_argument("agent: truncated checkpoint data");
    }
  }
  return m;
}

}  // namespace rlbd
