#include "rlbd/feasibility.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace rlbd {

PerturbedMdp build_perturbed_mdp(const TabularMdp& mdp,
                                 const std::vector<int>& targets,
                                 int a_dagger) {
  mdp.validate();
  if (a_dagger < 0 || a_dagger >= mdp.n_actions) {
    throw std::invalid_argument("perturbed mdp: backdoor action out of range");
  }
  PerturbedMdp pm;
  pm.a_dagger = a_dagger;
  pm.targets = targets;
  std::sort(pm.targets.begin(), pm.targets.end());
  pm.targets.erase(std::unique(pm.targets.begin(), pm.targets.end()),
                   pm.targets.end());
  for (int s : pm.targets) {
    if (s < 0 || s >= mdp.n_states) {
      throw std::invalid_argument("perturbed mdp: target state out of range");
    }
  }

  const int S = mdp.n_states;
  const int A = mdp.n_actions;
  const int K = static_cast<int>(pm.targets.size());

  Solution sol = value_iteration(mdp);

  pm.state_map.resize(S);
  for (int s = 0; s < S; ++s) pm.state_map[s] = s;
  pm.action_map.assign(S, std::vector<int>(A));
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) pm.action_map[s][a] = a;
  }
  for (int i = 0; i < K; ++i) {
    const int s = pm.targets[i];
    const int twin = S + i;
    pm.twin_of[s] = twin;
    pm.state_map[s] = twin;
    const std::vector<int>& optimal = sol.policy.action_sets[s];
    if (optimal.size() > 1) {
      pm.tied_targets.push_back(s);
      pm.unique_assumption = false;
    }
    const int a_star = optimal.front();
    pm.action_map[s][a_dagger] = a_star;
    pm.action_map[s][a_star] = a_dagger;
  }

  TabularMdp out;
  out.n_states = S + K;
  out.n_actions = A;
  out.horizon = mdp.horizon;
  out.reward.assign(static_cast<size_t>(S + K) * A, 0.0);
  out.transition.assign(static_cast<size_t>(S + K) * A * (S + K), 0.0);
  out.init_dist.assign(S + K, 0.0);
  for (int s = 0; s < S; ++s) out.init_dist[s] = mdp.init_dist[s];
  // original rows verbatim; transitions only ever land on original states
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      out.set_r(s, a, mdp.r(s, a));
      for (int s2 = 0; s2 < S; ++s2) out.set_p(s, a, s2, mdp.p(s, a, s2));
    }
  }
  // twin rows read the original through the action swap
  for (int i = 0; i < K; ++i) {
    const int s = pm.targets[i];
    const int twin = S + i;
    for (int a = 0; a < A; ++a) {
      const int src = pm.action_map[s][a];
      out.set_r(twin, a, mdp.r(s, src));
      for (int s2 = 0; s2 < S; ++s2) {
        out.set_p(twin, a, s2, mdp.p(s, src, s2));
      }
    }
  }
  out.validate();
  pm.mdp = std::move(out);
  return pm;
}

GoalVerdict verify_attack_goals(const PerturbedMdp& pm,
                                const TabularMdp& original) {
  GoalVerdict verdict;
  verdict.unique_assumption = pm.unique_assumption;
  verdict.tied_targets = pm.tied_targets;

  Solution base = value_iteration(original);
  Solution pert = value_iteration(pm.mdp);
  verdict.original_value = start_value(base.tables, original);
  verdict.perturbed_value = start_value(pert.tables, pm.mdp);
  verdict.goal2 =
      std::fabs(verdict.perturbed_value - verdict.original_value) <= 1e-9;

  verdict.goal1 = true;
  for (int s : pm.targets) {
    TargetVerdict tv;
    tv.state = s;
    tv.twin = pm.twin_of.at(s);
    tv.twin_action_set = pert.policy.action_sets[tv.twin];
    tv.unique = std::find(pm.tied_targets.begin(), pm.tied_targets.end(),
                          s) == pm.tied_targets.end();
    if (tv.unique) {
      tv.backdoor_optimal =
          tv.twin_action_set == std::vector<int>{pm.a_dagger};
    } else {
      tv.backdoor_optimal =
          std::find(tv.twin_action_set.begin(), tv.twin_action_set.end(),
                    pm.a_dagger) != tv.twin_action_set.end();
    }
    if (!tv.backdoor_optimal) {
      verdict.goal1 = false;
      verdict.failed_targets.push_back(s);
    }
    verdict.targets.push_back(std::move(tv));
  }
  return verdict;
}

std::string verdict_to_json(const GoalVerdict& verdict) {
  nlohmann::json j;
  j["goal1"] = verdict.goal1;
  j["goal2"] = verdict.goal2;
  j["unique_assumption"] = verdict.unique_assumption;
  j["original_value"] = verdict.original_value;
  j["perturbed_value"] = verdict.perturbed_value;
  j["failed_targets"] = verdict.failed_targets;
  j["tied_targets"] = verdict.tied_targets;
  j["targets"] = nlohmann::json::array();
  for (const TargetVerdict& tv : verdict.targets) {
    j["targets"].push_back({{"state", tv.state},
                            {"twin", tv.twin},
                            {"backdoor_optimal", tv.backdoor_optimal},
                            {"unique", tv.unique},
                            {"twin_action_set", tv.twin_action_set}});
  }
  return j.dump(2);
}

TabularMdp jitter_for_uniqueness(const TabularMdp& mdp, double magnitude,
                                 Rng& rng) {
  if (!(magnitude > 0.0)) {
    throw std::invalid_argument("jitter: magnitude must be positive");
  }
  TabularMdp out = mdp;
  for (double& r : out.reward) r += rng.uniform(0.0, magnitude);
  return out;
}

}  // namespace rlbd
