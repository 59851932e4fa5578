#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "rlbd/mdp.hpp"
#include "rlbd/trigger.hpp"

namespace rlbd {

// Row-major grayscale observation with pixels in [0, 1].
struct GridObservation {
  int rows = 0;
  int cols = 0;
  std::vector<double> pixels;

  double at(int r, int c) const { return pixels[r * cols + c]; }
  void set(int r, int c, double v) { pixels[r * cols + c] = v; }
  bool operator==(const GridObservation& o) const {
    return rows == o.rows && cols == o.cols && pixels == o.pixels;
  }
};

struct EnvParams {
  int height = 8;
  int width = 8;
  int horizon = -1;  // -1 => per-environment default
  int drift = 0;     // catchball: ball column drift per fall, in {-1,0,1}
};

// A small pixel-observed task backed by an explicit tabular MDP, so the same
// environment supports both learned agents (pixels) and exact analysis
// (tables). Observations are injective over the reachable states.
struct Env {
  std::string id;
  EnvParams params;
  TabularMdp mdp;
  int obs_rows = 0;
  int obs_cols = 0;
  std::vector<std::string> action_names;
  double min_positive_reward = 0.0;
  double return_min = 0.0;  // lower bound on any episode return
  double return_max = 0.0;  // best expected return from the start distribution

  GridObservation observe(int s) const { return observe_fn(s); }
  bool target_predicate(int s) const { return target_fn(s); }
  const std::vector<int>& reachable_states() const { return reachable; }
  bool is_natural(const GridObservation& obs) const {
    return natural.count(obs.pixels) > 0;
  }
  int action_index(const std::string& name) const;

  std::function<GridObservation(int)> observe_fn;
  std::function<bool(int)> target_fn;
  std::vector<int> reachable;
  std::set<std::vector<double>> natural;  // reachable observations, exact
};

// ids: "catchball" (H x W falling-ball catch task, actions
// left/right/stay/fire), "goalgrid" (height x height navigation, actions
// up/down/left/right), "chain3" (three-state diagnostic chain, actions L/R).
Env make_env(const std::string& id, const EnvParams& params = {});

// Pixel-wise obs' = clamp(obs + patch, 0, 1) over the patch rectangle.
// Throws if the patch does not fit inside the observation.
GridObservation inject_trigger(const GridObservation& obs, const Trigger& t);

// True iff injecting the trigger at every targeted state yields an
// observation outside the natural (reachable) observation set.
bool check_trigger_separation(const Env& env, const Trigger& t);

// Smallest strictly positive reward entry; throws if the table has none.
double min_positive_reward_of(const TabularMdp& mdp);

// 8-bit quantized ASCII PGM export for visual inspection (never read back).
void write_pgm(const GridObservation& obs, const std::string& path);

// --- catchball structure helpers (used by the attack harness and tests) ---
struct CatchballState {
  int ball_row = 0;
  int ball_col = 0;
  int paddle_col = 0;
};
bool catchball_is_dead(const Env& env, int s);
CatchballState catchball_decode(const Env& env, int s);
int catchball_index(const Env& env, int ball_row, int ball_col, int paddle_col);

}  // namespace rlbd
