#pragma once

#include <map>
#include <string>
#include <vector>

#include "rlbd/mdp.hpp"
#include "rlbd/rng.hpp"

namespace rlbd {

// The counterfactual instance where each targeted state gets a poisoned
// twin whose backdoor action plays the role its optimal action played.
// Twins are appended as fresh indices in ascending order of the original
// state id; dynamics and the initial distribution never reach them, so the
// twin is enterable only as an alternative observation of its original.
struct PerturbedMdp {
  TabularMdp mdp;  // S + one twin per target
  int a_dagger = -1;
  std::vector<int> targets;  // sorted, deduplicated original ids
  // F_S: original id -> twin id for targets, identity elsewhere
  std::vector<int> state_map;
  // F_A[s][a]: swaps a_dagger with the (lowest-index) optimal action at
  // targeted s, identity everywhere else; an involution per state
  std::vector<std::vector<int>> action_map;
  std::map<int, int> twin_of;
  std::vector<int> tied_targets;  // targets whose optimal action was tied
  bool unique_assumption = true;  // no tied targets
};

PerturbedMdp build_perturbed_mdp(const TabularMdp& mdp,
                                 const std::vector<int>& targets,
                                 int a_dagger);

struct TargetVerdict {
  int state = -1;
  int twin = -1;
  bool backdoor_optimal = false;  // strict form when unique, membership else
  bool unique = false;
  std::vector<int> twin_action_set;
};

struct GoalVerdict {
  bool goal1 = false;  // every twin elicits the backdoor action
  bool goal2 = false;  // clean start value unchanged (tolerance 1e-9)
  bool unique_assumption = false;
  double original_value = 0.0;
  double perturbed_value = 0.0;
  std::vector<TargetVerdict> targets;
  std::vector<int> failed_targets;
  std::vector<int> tied_targets;
};

GoalVerdict verify_attack_goals(const PerturbedMdp& pm,
                                const TabularMdp& original);

std::string verdict_to_json(const GoalVerdict& verdict);

// Test-fixture helper: adds a seeded uniform perturbation in [0, magnitude)
// to every reward entry so optimal-action ties vanish almost surely while
// orderings of gaps wider than 2*magnitude survive.
TabularMdp jitter_for_uniqueness(const TabularMdp& mdp, double magnitude,
                                 Rng& rng);

}  // namespace rlbd
