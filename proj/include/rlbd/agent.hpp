#pragma once

#include <string>
#include <vector>

#include "rlbd/rng.hpp"

namespace rlbd {

struct AgentConfig {
  int n_inputs = 0;
  int n_actions = 0;
  int hidden = 32;
  double lr = 0.05;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double grad_clip = 5.0;
};

// Two-layer tanh network with a softmax policy head and a scalar value head,
// trained by one-step advantage actor-critic with plain SGD. Parameters live
// in one flat vector laid out as [W1, b1, W2, b2, w3, b3].
class PolicyModel {
 public:
  PolicyModel(const AgentConfig& cfg, Rng& rng);

  std::vector<double> policy(const std::vector<double>& obs) const;
  double value(const std::vector<double>& obs) const;
  int act(const std::vector<double>& obs, Rng& rng) const;
  int greedy_action(const std::vector<double>& obs) const;
  // -log pi(action | obs)
  double action_nll(const std::vector<double>& obs, int action) const;

  // One actor-critic step on a transition. The bootstrap target is
  // r + (done ? 0 : V(next_obs)), treated as a constant. Returns the
  // advantage used for the update.
  double update(const std::vector<double>& obs, int action, double reward,
                const std::vector<double>& next_obs, bool done);

  // Per-sample loss with an explicitly frozen value target:
  //   -log pi(a|obs) * advantage + value_coef * (V - target)^2
  //   - entropy_coef * H(pi(.|obs))
  double sample_loss(const std::vector<double>& obs, int action,
                     double advantage, double target,
                     double entropy_coef) const;

  // Gradient of sample_loss wrt the parameters, with the target fixed at
  // V(obs) + advantage; a zero advantage therefore gives a zero gradient
  // and (entropy_coef == 0) the gradient is linear in the advantage.
  std::vector<double> sample_gradient(const std::vector<double>& obs,
                                      int action, double advantage,
                                      double entropy_coef) const;

  // Gradient of -log pi(target_action | obs) wrt the observation pixels.
  std::vector<double> input_gradient(const std::vector<double>& obs,
                                     int target_action) const;

  const AgentConfig& config() const { return cfg_; }
  int n_parameters() const { return static_cast<int>(theta_.size()); }
  const std::vector<double>& parameters() const { return theta_; }
  void set_parameters(std::vector<double> theta);

  void save(const std::string& path) const;
  static PolicyModel load(const std::string& path);

 private:
  PolicyModel() = default;

  struct Forward {
    std::vector<double> h1;      // tanh activations
    std::vector<double> logits;  // policy head
    std::vector<double> logp;    // log softmax
    std::vector<double> p;       // softmax
    double v = 0.0;              // value head
  };
  Forward forward(const std::vector<double>& obs) const;
  // layout offsets into theta_
  int w1() const { return 0; }
  int b1() const { return cfg_.hidden * cfg_.n_inputs; }
  int w2() const { return b1() + cfg_.hidden; }
  int b2() const { return w2() + cfg_.n_actions * cfg_.hidden; }
  int w3() const { return b2() + cfg_.n_actions; }
  int b3() const { return w3() + cfg_.hidden; }

  AgentConfig cfg_;
  std::vector<double> theta_;
};

}  // namespace rlbd
