#pragma once

#include <cstdint>
#include <string>

#include "rlbd/agent.hpp"
#include "rlbd/env.hpp"

namespace rlbd {

enum class RunMode { kClean, kBadrlS, kBadrlW, kBadrlM, kBadrlCe, kBaseline };

RunMode parse_mode(const std::string& name);  // throws on unknown name
const char* mode_name(RunMode mode);

// Everything a run needs, resolved from a flat key=value config file.
// Sentinels (-1 / 0 where noted) mean "derive at run time": eta from the
// environment's smallest positive reward, actions from per-environment
// defaults, baseline period from 1/epsilon.
struct ExperimentConfig {
  // environment
  std::string env_id = "catchball";
  EnvParams env_params;

  // run identity
  RunMode mode = RunMode::kClean;
  std::uint64_t seed = 1;
  std::uint64_t total_steps = 200000;
  double warmup_fraction = 0.1;  // leading fraction trained clean in all modes

  // attack plan
  double epsilon = 0.001;
  double top_k = 10.0;
  double eta = 0.0;        // 0 => environment min positive reward
  int target_action = -1;  // -1 => per-environment default
  int source_action = -1;  // -1 => per-environment default

  // trigger placement and tuning
  std::string trigger_source = "manual";  // manual | tune-mi | tune-ce
  int trigger_row = 0;
  int trigger_col = 0;
  int trigger_rows = 2;
  int trigger_cols = 2;
  int mi_generations = 40;
  double mi_lambda = 6.0;
  int ce_iterations = 200;
  double ce_step = 0.5;

  // victim hyperparameters (n_inputs / n_actions filled in by the harness)
  AgentConfig victim{0, 0, 128, 0.015, 0.5, 0.02, 5.0};

  // attacker's own policy/Q source
  std::string q_source = "exact";  // exact | rollout
  std::uint64_t pretrain_max_steps = 300000;
  double pretrain_quality = 0.9;
  int attacker_rollouts = 32;

  // uniform-schedule baseline
  std::uint64_t baseline_period = 0;    // 0 => round(1 / epsilon)
  std::uint64_t baseline_test_cap = 0;  // 0 => unlimited

  // evaluation protocol
  int eval_seeds = 5;
  int eval_episodes = 30;
  int curve_points = 50;
  int curve_episodes = 10;

  std::string out = "out";

  void validate() const;  // throws std::invalid_argument with the bad key
};

// Parse a config file (or raw text): one `key = value` per line, `#` starts
// a comment, blank lines ignored. Unknown or duplicate keys are errors.
ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);

// Apply one key=value override (same key set as the file format).
void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value);

// The resolved config as pretty JSON (for the manifest).
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace rlbd
