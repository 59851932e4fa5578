#include "rlbd/attack.hpp"

#include <cmath>
#include <stdexcept>

namespace rlbd {

void AttackPlan::validate() const {
  if (mode == AttackerMode::kNone) {
    throw std::invalid_argument("attack plan: mode is none");
  }
  if (target_action < 0 || source_action < 0) {
    throw std::invalid_argument("attack plan: action indices must be set");
  }
  if (target_action == source_action) {
    throw std::invalid_argument(
        "attack plan: target and source actions must differ");
  }
  if (!(epsilon > 0.0 && epsilon <= 0.05)) {
    throw std::invalid_argument(
        "attack plan: epsilon must lie in (0, 0.05] to stay sparse");
  }
  if (!(top_k > 0.0 && top_k <= 100.0)) {
    throw std::invalid_argument("attack plan: top_k must lie in (0, 100]");
  }
  if (!(eta > 0.0)) {
    throw std::invalid_argument("attack plan: eta must be positive");
  }
}

void QuantileTracker::append(double v) {
  if (!lower_.empty() && v <= *lower_.rbegin()) {
    lower_.insert(v);
  } else {
    upper_.insert(v);
  }
}

void QuantileTracker::rebalance(std::uint64_t rank) {
  while (lower_.size() > rank) {
    auto it = std::prev(lower_.end());
    upper_.insert(*it);
    lower_.erase(it);
  }
  while (lower_.size() < rank) {
    auto it = upper_.begin();
    lower_.insert(*it);
    upper_.erase(it);
  }
}

double QuantileTracker::percentile(double p) {
  const std::uint64_t n = size();
  if (n == 0) {
    throw std::logic_error("quantile tracker: percentile of empty pool");
  }
  auto rank = static_cast<std::uint64_t>(
      std::max(1.0, std::ceil(p / 100.0 * static_cast<double>(n) - 1e-9)));
  if (rank > n) rank = n;
  rebalance(rank);
  return *lower_.rbegin();
}

double attack_value(const AttackContext& ctx, int s, int a_dagger) {
  const int own = ctx.attacker_action(s);
  return ctx.attacker_q(s, own) - ctx.attacker_q(s, a_dagger);
}

namespace {

bool poison_inner(const AttackPlan& plan, const AttackContext& ctx,
                  AttackState& st, int s, bool* computed, double* value_out) {
  if (ctx.attacker_action(s) != plan.source_action) return false;
  const double v = attack_value(ctx, s, plan.target_action);
  if (computed) *computed = true;
  if (value_out) *value_out = v;
  st.history.append(v);
  return v >= st.history.percentile(100.0 - plan.top_k);
}

}  // namespace

bool poison_decision(const AttackPlan& plan, const AttackContext& ctx,
                     AttackState& st, int s, double* value_out) {
  return poison_inner(plan, ctx, st, s, nullptr, value_out);
}

AttackDecision attack_begin_step(const AttackPlan& plan,
                                 const AttackContext& ctx, AttackState& st,
                                 int s) {
  st.t += 1;
  AttackDecision d;
  if (plan.mode == AttackerMode::kNone) return d;
  if (!ctx.targeted(s)) return d;
  const double spent =
      static_cast<double>(st.t_attack) / static_cast<double>(st.t);
  if (!(spent < plan.epsilon)) return d;
  d.attacked = poison_inner(plan, ctx, st, s, &d.has_value, &d.value);
  if (d.attacked) st.t_attack += 1;
  return d;
}

int attack_override_action(const AttackPlan& plan, const AttackState& st,
                           int n_actions, int agent_action, Rng& rng) {
  if (plan.mode == AttackerMode::kWeak) return agent_action;
  if (st.t % 2 == 0) return plan.target_action;
  // odd step: any action except the backdoor one, uniformly
  const int i = rng.uniform_int(n_actions - 1);
  return i >= plan.target_action ? i + 1 : i;
}

double attack_override_reward(const AttackPlan& plan, const AttackState& st,
                              int final_action, double env_reward) {
  (void)env_reward;
  if (plan.mode == AttackerMode::kWeak) {
    return final_action == plan.target_action ? plan.eta : -plan.eta;
  }
  return st.t % 2 == 0 ? plan.eta : -plan.eta;
}

PoisonedTuple training_attack_step(const AttackPlan& plan,
                                   const AttackContext& ctx, AttackState& st,
                                   int s, int agent_action, double env_reward,
                                   int n_actions, Rng& rng) {
  if (plan.mode == AttackerMode::kNone) {
    throw std::invalid_argument("training_attack_step: mode is none");
  }
  AttackDecision d = attack_begin_step(plan, ctx, st, s);
  PoisonedTuple out;
  out.attacked = d.attacked;
  out.has_value = d.has_value;
  out.value = d.value;
  out.action = agent_action;
  out.reward = env_reward;
  if (d.attacked) {
    out.action =
        attack_override_action(plan, st, n_actions, agent_action, rng);
    out.reward = attack_override_reward(plan, st, out.action, env_reward);
  }
  return out;
}

AttackDecision test_attack_step(const AttackPlan& plan,
                                const AttackContext& ctx, AttackState& st,
                                int s) {
  return attack_begin_step(plan, ctx, st, s);
}

AttackDecision baseline_training_step(const AttackPlan& plan, int period,
                                      AttackState& st) {
  if (period < 1) {
    throw std::invalid_argument("baseline: period must be >= 1");
  }
  st.t += 1;
  AttackDecision d;
  if (st.t % static_cast<std::uint64_t>(period) != 0) return d;
  const double spent =
      static_cast<double>(st.t_attack) / static_cast<double>(st.t);
  if (!(spent < plan.epsilon)) return d;
  d.attacked = true;
  st.t_attack += 1;
  return d;
}

AttackDecision baseline_test_step(const AttackPlan& plan, AttackState& st,
                                  std::uint64_t attack_cap) {
  (void)plan;
  st.t += 1;
  AttackDecision d;
  if (st.t_attack >= attack_cap) return d;
  d.attacked = true;
  st.t_attack += 1;
  return d;
}

}  // namespace rlbd
