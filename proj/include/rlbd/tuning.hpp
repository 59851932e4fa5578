#pragma once

#include <cstdint>
#include <vector>

#include "rlbd/agent.hpp"
#include "rlbd/env.hpp"
#include "rlbd/trigger.hpp"

namespace rlbd {

// Cosine similarity; exactly 1 for bitwise-identical vectors, 0 when either
// vector is all zero.
double cosine(const std::vector<double>& a, const std::vector<double>& b);

// Mean over samples of cos(g_clean(s), g_poisoned(s + trigger)) where both
// per-sample gradients are taken with the matched pair (action =
// target_action, unit advantage, no entropy term), isolating the trigger's
// effect on the optimization direction.
double gradient_alignment(const PolicyModel& model, const Env& env,
                          const std::vector<int>& samples,
                          const Trigger& trigger, int target_action);

struct TuningReport {
  int iterations = 0;
  // per-iteration loss of the accepted sequence (index 0 = the init);
  // non-increasing by the greedy acceptance rule
  std::vector<double> objective_trace;
  double final_alignment = 0.0;    // in [-1, 1]
  double final_mi_estimate = 0.0;  // nats, diagnostic
  std::uint64_t seed = 0;
  bool mi_ridge_applied = false;
};

struct TuneResult {
  Trigger trigger;
  TuningReport report;
};

// Derivative-free (1+lambda) local search maximizing the alignment
// objective: each generation proposes lambda mutations (move the anchor one
// cell, or resample one patch cell to sign * U(0.5, 1), keeping the patch
// contrasty) and accepts the best candidate only on strict improvement.
// The trace stores the negated alignment so it reads as a loss. The model
// snapshot is read-only.
TuneResult tune_trigger_mi(const Env& env, const PolicyModel& snapshot,
                           const std::vector<int>& samples,
                           const Trigger& init, int target_action,
                           int generations, int lambda, std::uint64_t seed);

// Projected first-order descent on the mean cross-entropy of the poisoned
// observation toward target_action, using the model's input gradient at
// the patch cells. The step halves while a proposal would increase the
// loss, so the trace is non-increasing; patch values stay in [-1, 1].
TuneResult tune_trigger_ce(const Env& env, const PolicyModel& snapshot,
                           const std::vector<int>& samples,
                           const Trigger& init, int target_action,
                           double step_size, int iterations);

struct MiEstimate {
  double nats = 0.0;
  bool ridged = false;  // covariance needed a ridge to factorize
};

// Gaussian canonical-correlation MI estimate between paired vector sets.
// Both sets are projected by one shared rng-seeded Gaussian matrix to
// sketch_dim, then MI = -1/2 sum log(1 - rho_i^2) over the canonical
// correlations (clamped below 1 so the estimate stays finite). Requires
// |x| = |y| >= sketch_dim + 2 samples.
MiEstimate estimate_mi(const std::vector<std::vector<double>>& x,
                       const std::vector<std::vector<double>>& y,
                       int sketch_dim, Rng& rng);

}  // namespace rlbd
