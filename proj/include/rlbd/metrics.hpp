#pragma once

#include <optional>
#include <vector>

#include "rlbd/attack.hpp"

namespace rlbd {

// Known per-environment episode-return bounds, min-max anchoring for the
// ratio metrics so they stay total on tasks whose returns can be negative.
struct ReturnBounds {
  double r_min = 0.0;
  double r_max = 0.0;
};

// Clean-data accuracy: clamp((v - r_min) / (n - r_min), 0, 1) where v is the
// victim's clean-environment return and n the normally-trained model's.
// Empty when n <= r_min (no headroom to compare against).
std::optional<double> compute_cda(double victim_clean_return,
                                  double normal_return, const ReturnBounds& b);

// Attack effectiveness rate: clamp((n - v_trig) / (n - r_min), 0, 1), the
// normalized drop of the victim's triggered-environment return below the
// normal model. Empty when n <= r_min.
std::optional<double> compute_aer(double victim_triggered_return,
                                  double normal_return, const ReturnBounds& b);

// Attack success rate: of the attacked steps in the trace, the fraction whose
// logged (sampled) action equals the backdoor action. Empty when the trace
// has no attacked steps; the caller decides how loudly to warn.
std::optional<double> compute_asr(const std::vector<TraceRecord>& test_trace,
                                  int target_action);

// Attacked fraction of all steps in the trace (0 for an empty trace).
double compute_sparsity(const std::vector<TraceRecord>& test_trace);

}  // namespace rlbd
