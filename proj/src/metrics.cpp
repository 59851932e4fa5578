#include "rlbd/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace rlbd {

namespace {

void check_bounds(const ReturnBounds& b) {
  if (!(b.r_max > b.r_min)) {
    throw std::invalid_argument("return bounds: r_max must exceed r_min");
  }
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

std::optional<double> compute_cda(double victim_clean_return,
                                  double normal_return,
                                  const ReturnBounds& b) {
  check_bounds(b);
  if (normal_return <= b.r_min) return std::nullopt;
  return clamp01((victim_clean_return - b.r_min) / (normal_return - b.r_min));
}

std::optional<double> compute_aer(double victim_triggered_return,
                                  double normal_return,
                                  const ReturnBounds& b) {
  check_bounds(b);
  if (normal_return <= b.r_min) return std::nullopt;
  return clamp01((normal_return - victim_triggered_return) /
                 (normal_return - b.r_min));
}

std::optional<double> compute_asr(const std::vector<TraceRecord>& test_trace,
                                  int target_action) {
  std::uint64_t attacked = 0, hits = 0;
  for (const TraceRecord& rec : test_trace) {
    if (!rec.attacked) continue;
    ++attacked;
    if (rec.action == target_action) ++hits;
  }
  if (attacked == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(attacked);
}

double compute_sparsity(const std::vector<TraceRecord>& test_trace) {
  if (test_trace.empty()) return 0.0;
  std::uint64_t attacked = 0;
  for (const TraceRecord& rec : test_trace) {
    if (rec.attacked) ++attacked;
  }
  return static_cast<double>(attacked) / static_cast<double>(test_trace.size());
}

}  // namespace rlbd
