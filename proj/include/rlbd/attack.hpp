#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <string>

#include "rlbd/rng.hpp"

namespace rlbd {

enum class AttackerMode { kStrong, kWeak, kNone };

// Static attacker configuration. Runtime counters live in AttackState.
struct AttackPlan {
  int target_action = -1;  // action the backdoor should elicit
  int source_action = -1;  // action the attacker's policy must prefer to gate
  double epsilon = 0.001;  // fraction of steps that may be poisoned
  double top_k = 10.0;     // percent of attack values considered worth it
  double eta = 0.0;        // poisoning reward power
  AttackerMode mode = AttackerMode::kNone;

  void validate() const;
};

// The attacker's view of the environment: its own policy, its Q estimate,
// and the static targeted-state predicate. All by state id; observation
// handling stays with the environment.
struct AttackContext {
  std::function<int(int s)> attacker_action;       // pi-dagger
  std::function<double(int s, int a)> attacker_q;  // Q estimate at time 0
  std::function<bool(int s)> targeted;             // S-dagger membership
};

// Append-only value pool answering nearest-rank percentile queries.
// rank(p, N) = clamp(ceil(p/100 * N - 1e-9), 1, N); the tiny slack keeps
// exact products (e.g. 80% of 5) from rounding up spuriously. threshold()
// rebalances two multisets around the current rank, so appends and queries
// are O(log N) amortized while the rank drifts by at most one per append.
class QuantileTracker {
 public:
  void append(double v);
  std::uint64_t size() const { return lower_.size() + upper_.size(); }
  // p-th nearest-rank percentile (p in [0,100]); requires size() >= 1
  double percentile(double p);

 private:
  void rebalance(std::uint64_t rank);
  std::multiset<double> lower_;  // the `rank` smallest values
  std::multiset<double> upper_;  // everything above
};

// Per-run attacker counters. `t` is the global step counter and advances on
// every step the attacker observes, attacked or not; step numbers start at 1.
// For the test phase the harness seeds `t` with the training-step total so
// the epsilon gate keeps enforcing the same absolute budget, with a fresh
// value history.
struct AttackState {
  std::uint64_t t = 0;
  std::uint64_t t_attack = 0;
  QuantileTracker history;
};

// V_A(s): the attacker's value gap between its own action and the backdoor
// action at s.
double attack_value(const AttackContext& ctx, int s, int a_dagger);

// The poison predicate: gate on the attacker's policy agreeing with
// source_action, append the attack value to the history, select iff it
// sits in the top k% (nearest-rank, inclusive). Ignores budget; that is
// the caller's gate. value_out (optional) receives v_t when computed.
bool poison_decision(const AttackPlan& plan, const AttackContext& ctx,
                     AttackState& st, int s, double* value_out = nullptr);

struct AttackDecision {
  bool attacked = false;
  bool has_value = false;  // poison predicate ran and computed v_t
  double value = 0.0;
};

// Advance to the next step and decide whether to poison it: static target
// predicate, then the budget gate t_attack/t < epsilon, then
// poison_decision. Increments t always and t_attack on attack.
AttackDecision attack_begin_step(const AttackPlan& plan,
                                 const AttackContext& ctx, AttackState& st,
                                 int s);

// Tuple rules for an attacked step (st.t = the step just begun).
// Strong: even t forces target_action, odd t draws uniformly from the
// other actions. Weak: the agent's action stands.
int attack_override_action(const AttackPlan& plan, const AttackState& st,
                           int n_actions, int agent_action, Rng& rng);
// Strong: even t -> +eta, odd t -> -eta. Weak: +eta iff the final action
// is the backdoor action, else -eta.
double attack_override_reward(const AttackPlan& plan, const AttackState& st,
                              int final_action, double env_reward);

// One-shot wrappers combining the above (decision + tuple rules).
struct PoisonedTuple {
  bool attacked = false;
  bool has_value = false;
  double value = 0.0;
  int action = 0;
  double reward = 0.0;
};
PoisonedTuple training_attack_step(const AttackPlan& plan,
                                   const AttackContext& ctx, AttackState& st,
                                   int s, int agent_action, double env_reward,
                                   int n_actions, Rng& rng);

// Test phase: same gates, but only the observation may change; actions and
// rewards are never touched.
AttackDecision test_attack_step(const AttackPlan& plan,
                                const AttackContext& ctx, AttackState& st,
                                int s);

// Uniform-schedule baseline. Training: poison every period-th step under
// the same epsilon budget, no value history. Testing: poison every step
// from the phase start until attack_cap attacks have landed.
AttackDecision baseline_training_step(const AttackPlan& plan, int period,
                                      AttackState& st);
AttackDecision baseline_test_step(const AttackPlan& plan, AttackState& st,
                                  std::uint64_t attack_cap);

// One per-step log record; the harness serializes these as trace.csv with
// columns phase,t,state_id,attacked,v_t,action,reward (v_t empty when the
// poison predicate did not run).
struct TraceRecord {
  std::string phase;  // "train" or "test"
  std::uint64_t t = 0;
  int state_id = 0;
  bool attacked = false;
  bool has_value = false;
  double value = 0.0;
  int action = 0;
  double reward = 0.0;
};

}  // namespace rlbd
