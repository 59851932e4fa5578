#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rlbd/rng.hpp"

namespace rlbd {

// Finite-horizon tabular MDP. Rewards are undiscounted and summed over the
// t = 0..horizon decision steps, so an episode takes horizon+1 actions.
struct TabularMdp {
  int n_states = 0;
  int n_actions = 0;
  int horizon = 0;
  std::vector<double> reward;      // [s * n_actions + a]
  std::vector<double> transition;  // [(s * n_actions + a) * n_states + s']
  std::vector<double> init_dist;   // [s]

  double r(int s, int a) const { return reward[s * n_actions + a]; }
  void set_r(int s, int a, double v) { reward[s * n_actions + a] = v; }
  double p(int s, int a, int s2) const {
    return transition[(s * n_actions + a) * n_states + s2];
  }
  void set_p(int s, int a, int s2, double v) {
    transition[(s * n_actions + a) * n_states + s2] = v;
  }
  const double* p_row(int s, int a) const {
    return &transition[(s * n_actions + a) * n_states];
  }

  // Throws std::invalid_argument naming the offending entry (row sums,
  // negative probabilities, shape mismatches, bad init distribution).
  void validate() const;
};

// Action choices per state. value_iteration fills both the stage-0 sets
// (`action_sets`) and the per-stage sets (`staged`, indexed [t][s]); the
// latter are what rollouts and exact evaluation use, since a finite-horizon
// optimum is stage-dependent. Ties are kept as ascending index sets and the
// deterministic tie rule picks the lowest index.
struct TabularPolicy {
  std::vector<std::vector<int>> action_sets;
  std::vector<std::vector<std::vector<int>>> staged;

  bool has_staged() const { return !staged.empty(); }
  int action(int s) const { return action_sets[s].front(); }
  int action(int t, int s) const {
    return has_staged() ? staged[t][s].front() : action(s);
  }
};

struct ValueTables {
  int n_states = 0;
  int n_actions = 0;
  int horizon = 0;
  std::vector<std::vector<double>> v;  // [t][s]
  std::vector<std::vector<double>> q;  // [t][s * n_actions + a]
};

struct Solution {
  ValueTables tables;
  TabularPolicy policy;
};

// Backward induction over stages T..0. v[t][s] = max_a q[t][s][a] holds
// exactly (same arithmetic path).
Solution value_iteration(const TabularMdp& mdp);

// E_{s0 ~ init_dist}[V*(s0)] for already-computed tables.
double start_value(const ValueTables& tables, const TabularMdp& mdp);

struct EvalResult {
  double mean = 0.0;
  std::vector<double> returns;
};

// Policy as a sampling callback (stage, state, rng) -> action.
using ActionSampler = std::function<int(int t, int s, Rng& rng)>;
// Policy as an explicit per-(stage,state) action distribution.
using ActionDistribution = std::function<std::vector<double>(int t, int s)>;

// Monte Carlo evaluation over full-length episodes. n_episodes must be >= 1.
EvalResult evaluate_policy(const TabularMdp& mdp, const ActionSampler& policy,
                           int n_episodes, Rng& rng);
EvalResult evaluate_policy(const TabularMdp& mdp, const TabularPolicy& policy,
                           int n_episodes, Rng& rng);

// Exact expected return of a (possibly stochastic) policy by backward DP.
double exact_policy_value(const TabularMdp& mdp,
                          const ActionDistribution& policy);
double exact_policy_value(const TabularMdp& mdp, const TabularPolicy& policy);

// Expected return of every open-loop action sequence (trajectory tree walk,
// exact under stochastic transitions). Refuses instances with more than
// max_sequences sequences, i.e. n_actions^(horizon+1) > max_sequences.
struct EnumeratedReturns {
  std::map<std::vector<int>, double> by_sequence;
  double best = 0.0;
};
EnumeratedReturns enumerate_returns(const TabularMdp& mdp,
                                    std::uint64_t max_sequences = 1000000);

// Plain-text serialization with exact decimal round-trip (%.17g).
void write_mdp(const TabularMdp& mdp, const std::string& path);
TabularMdp read_mdp(const std::string& path);

// Random instance generator for property tests and feasibility sweeps.
// Dense Dirichlet-like rows; deterministic=true uses one-hot rows instead.
TabularMdp random_mdp(Rng& rng, int max_states = 30, int max_actions = 4,
                      int max_horizon = 20, bool deterministic = false);

// Shared helper: sample an index from a non-negative weight row of length n
// that sums to ~1.
int sample_categorical(const double* w, int n, Rng& rng);

}  // namespace rlbd
