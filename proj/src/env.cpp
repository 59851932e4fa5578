#include "rlbd/env.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <stdexcept>

namespace rlbd {

namespace {

// Non-negative modulo for ball-column wrap.
int wrap(int v, int m) { return ((v % m) + m) % m; }

void finish_env(Env& env) {
  env.mdp.validate();
  env.min_positive_reward = min_positive_reward_of(env.mdp);

  // Reachability closure from the start distribution under any action.
  std::vector<char> seen(env.mdp.n_states, 0);
  std::deque<int> queue;
  for (int s = 0; s < env.mdp.n_states; ++s) {
    if (env.mdp.init_dist[s] > 0.0) {
      seen[s] = 1;
      queue.push_back(s);
    }
  }
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (int a = 0; a < env.mdp.n_actions; ++a) {
      for (int s2 = 0; s2 < env.mdp.n_states; ++s2) {
        if (!seen[s2] && env.mdp.p(s, a, s2) > 0.0) {
          seen[s2] = 1;
          queue.push_back(s2);
        }
      }
    }
  }
  env.reachable.clear();
  for (int s = 0; s < env.mdp.n_states; ++s) {
    if (seen[s]) env.reachable.push_back(s);
  }
  env.natural.clear();
  for (int s : env.reachable) env.natural.insert(env.observe(s).pixels);

  // Return bounds used by the metric anchoring.
  double min_r = *std::min_element(env.mdp.reward.begin(), env.mdp.reward.end());
  env.return_min = std::min(0.0, min_r * (env.mdp.horizon + 1));
  Solution sol = value_iteration(env.mdp);
  double best = -1e300;
  for (int s = 0; s < env.mdp.n_states; ++s) {
    if (env.mdp.init_dist[s] > 0.0) best = std::max(best, sol.tables.v[0][s]);
  }
  env.return_max = best;
}

Env make_catchball(const EnvParams& params) {
  const int H = params.height, W = params.width;
  if (H < 4 || H > 16 || W < 4 || W > 16) {
    throw std::invalid_argument("catchball: height/width must be in [4,16]");
  }
  if (params.drift < -1 || params.drift > 1) {
    throw std::invalid_argument("catchball: drift must be -1, 0 or 1");
  }
  const int drift = params.drift;
  const int horizon = params.horizon >= 0 ? params.horizon : 20 * (H - 1) - 1;

  Env env;
  env.id = "catchball";
  env.params = params;
  env.params.horizon = horizon;
  env.obs_rows = H;
  env.obs_cols = W;
  env.action_names = {"left", "right", "stay", "fire"};

  const int live = (H - 1) * W * W;
  const int dead = live;
  const int S = live + 1;
  const int A = 4;
  auto idx = [W](int r, int c, int p) { return (r * W + c) * W + p; };

  // Spawn columns: keep a one-column dark margin when the ball falls
  // straight; a drifting ball sweeps every column anyway.
  std::vector<int> spawn_cols;
  if (drift == 0) {
    for (int c = 1; c <= W - 2; ++c) spawn_cols.push_back(c);
  } else {
    for (int c = 0; c < W; ++c) spawn_cols.push_back(c);
  }

  TabularMdp m;
  m.n_states = S;
  m.n_actions = A;
  m.horizon = horizon;
  m.reward.assign(static_cast<size_t>(S) * A, 0.0);
  m.transition.assign(static_cast<size_t>(S) * A * S, 0.0);
  m.init_dist.assign(S, 0.0);

  const int kLeft = 0, kRight = 1, kFire = 3;
  for (int r = 0; r < H - 1; ++r) {
    for (int c = 0; c < W; ++c) {
      for (int p = 0; p < W; ++p) {
        int s = idx(r, c, p);
        for (int a = 0; a < A; ++a) {
          int delta = a == kLeft ? -1 : (a == kRight ? 1 : 0);
          int p2 = std::clamp(p + delta, 0, W - 1);
          if (r < H - 2) {
            int c2 = drift == 0 ? c : wrap(c + drift, W);
            m.set_p(s, a, idx(r + 1, c2, p2), 1.0);
          } else {
            // Decision row: the ball lands this step. Catch needs the paddle
            // on the landing column and a hands-on action (fire fumbles).
            int landing = drift == 0 ? c : wrap(c + drift, W);
            bool caught = (a != kFire) && (p2 == landing);
            if (caught) {
              m.set_r(s, a, 1.0);
              for (int cs : spawn_cols) {
                m.set_p(s, a, idx(0, cs, p2),
                        1.0 / static_cast<double>(spawn_cols.size()));
              }
            } else {
              m.set_p(s, a, dead, 1.0);
            }
          }
        }
      }
    }
  }
  for (int a = 0; a < A; ++a) m.set_p(dead, a, dead, 1.0);

  for (int cs : spawn_cols) {
    m.init_dist[idx(0, cs, W / 2)] = 1.0 / static_cast<double>(spawn_cols.size());
  }

  env.mdp = std::move(m);
  env.observe_fn = [H, W, live, idx](int s) {
    GridObservation obs;
    obs.rows = H;
    obs.cols = W;
    obs.pixels.assign(static_cast<size_t>(H) * W, 0.0);
    if (s == live) return obs;  // dead: all dark
    int p = s % W;
    int c = (s / W) % W;
    int r = s / (W * W);
    obs.set(r, c, 1.0);
    obs.set(H - 1, p, 1.0);
    return obs;
  };
  env.target_fn = [H, W, live](int s) {
    if (s == live) return false;
    int r = s / (W * W);
    return r >= H - 3;  // ball within two rows of the paddle row
  };
  finish_env(env);
  return env;
}

Env make_goalgrid(const EnvParams& params) {
  const int N = params.height;
  if (N < 3 || N > 16) {
    throw std::invalid_argument("goalgrid: size must be in [3,16]");
  }
  if (params.width != params.height && params.width != 8) {
    // Only square grids are meaningful; allow the default-constructed width.
    if (params.width != N) {
      throw std::invalid_argument("goalgrid: grid must be square");
    }
  }
  const int horizon = params.horizon >= 0 ? params.horizon : 16;

  Env env;
  env.id = "goalgrid";
  env.params = params;
  env.params.width = N;
  env.params.horizon = horizon;
  env.obs_rows = N;
  env.obs_cols = N;
  env.action_names = {"up", "down", "left", "right"};

  const int S = N * N;
  const int A = 4;
  const int goal = S - 1;
  auto idx = [N](int r, int c) { return r * N + c; };

  TabularMdp m;
  m.n_states = S;
  m.n_actions = A;
  m.horizon = horizon;
  m.reward.assign(static_cast<size_t>(S) * A, 0.0);
  m.transition.assign(static_cast<size_t>(S) * A * S, 0.0);
  m.init_dist.assign(S, 0.0);
  m.init_dist[idx(0, 0)] = 1.0;

  const int dr[4] = {-1, 1, 0, 0};
  const int dc[4] = {0, 0, -1, 1};
  for (int r = 0; r < N; ++r) {
    for (int c = 0; c < N; ++c) {
      int s = idx(r, c);
      for (int a = 0; a < A; ++a) {
        if (s == goal) {
          m.set_r(s, a, 1.0);
          m.set_p(s, a, goal, 1.0);  // absorbing: keep farming
        } else {
          int r2 = std::clamp(r + dr[a], 0, N - 1);
          int c2 = std::clamp(c + dc[a], 0, N - 1);
          m.set_p(s, a, idx(r2, c2), 1.0);
        }
      }
    }
  }

  env.mdp = std::move(m);
  env.observe_fn = [N, goal, idx](int s) {
    GridObservation obs;
    obs.rows = N;
    obs.cols = N;
    obs.pixels.assign(static_cast<size_t>(N) * N, 0.0);
    if (s != goal) obs.pixels[goal] = 0.5;
    obs.pixels[s] = 1.0;
    return obs;
  };
  env.target_fn = [N, goal](int s) {
    int r = s / N, c = s % N;
    int gr = goal / N, gc = goal % N;
    int dist = std::abs(r - gr) + std::abs(c - gc);
    return dist >= 1 && dist <= 2;
  };
  finish_env(env);
  return env;
}

Env make_chain3_env(const EnvParams& params) {
  Env env;
  env.id = "chain3";
  env.params = params;
  env.params.height = 1;
  env.params.width = 4;
  env.params.horizon = params.horizon >= 0 ? params.horizon : 2;
  env.obs_rows = 1;
  env.obs_cols = 4;
  env.action_names = {"L", "R"};

  TabularMdp m;
  m.n_states = 3;
  m.n_actions = 2;
  m.horizon = env.params.horizon;
  m.reward.assign(6, 0.0);
  m.transition.assign(18, 0.0);
  m.init_dist = {1.0, 0.0, 0.0};
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 2; ++a) {
      m.set_r(s, a, s == 2 ? 1.0 : 0.0);
      int next = std::clamp(s + (a == 0 ? -1 : 1), 0, 2);
      m.set_p(s, a, next, 1.0);
    }
  }

  env.mdp = std::move(m);
  env.observe_fn = [](int s) {
    GridObservation obs;
    obs.rows = 1;
    obs.cols = 4;
    obs.pixels.assign(4, 0.0);
    obs.pixels[s] = 1.0;
    return obs;
  };
  env.target_fn = [](int s) { return s == 0; };
  finish_env(env);
  return env;
}

}  // namespace

int Env::action_index(const std::string& name) const {
  for (size_t i = 0; i < action_names.size(); ++i) {
    if (action_names[i] == name) return static_cast<int>(i);
  }
  throw std::invalid_argument("env " + id + ": unknown action '" + name + "'");
}

Env make_env(const std::string& id, const EnvParams& params) {
  if (id == "catchball") return make_catchball(params);
  if (id == "goalgrid") return make_goalgrid(params);
  if (id == "chain3") return make_chain3_env(params);
  throw std::invalid_argument("make_env: unknown environment '" + id + "'");
}

GridObservation inject_trigger(const GridObservation& obs, const Trigger& t) {
  t.validate();
  if (t.row < 0 || t.col < 0 || t.row + t.rows > obs.rows ||
      t.col + t.cols > obs.cols) {
    throw std::invalid_argument("inject_trigger: patch out of bounds");
  }
  GridObservation out = obs;
  for (int r = 0; r < t.rows; ++r) {
    for (int c = 0; c < t.cols; ++c) {
      double v = out.at(t.row + r, t.col + c) + t.at(r, c);
      out.set(t.row + r, t.col + c, std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

bool check_trigger_separation(const Env& env, const Trigger& t) {
  for (int s : env.reachable_states()) {
    if (!env.target_predicate(s)) continue;
    if (env.is_natural(inject_trigger(env.observe(s), t))) return false;
  }
  return true;
}

double min_positive_reward_of(const TabularMdp& mdp) {
  double best = 1e300;
  for (double v : mdp.reward) {
    if (v > 0.0) best = std::min(best, v);
  }
  if (best == 1e300) {
    throw std::invalid_argument(
        "environment has no positive reward entry; reward scale undefined");
  }
  return best;
}

void write_pgm(const GridObservation& obs, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_pgm: cannot open " + path);
  f << "P2\n" << obs.cols << " " << obs.rows << "\n255\n";
  for (int r = 0; r < obs.rows; ++r) {
    for (int c = 0; c < obs.cols; ++c) {
      int v = static_cast<int>(std::lround(obs.at(r, c) * 255.0));
      f << (c ? " " : "") << std::clamp(v, 0, 255);
    }
    f << "\n";
  }
}

bool catchball_is_dead(const Env& env, int s) {
  if (env.id != "catchball") {
    throw std::invalid_argument("catchball helper used on env " + env.id);
  }
  return s == env.mdp.n_states - 1;
}

CatchballState catchball_decode(const Env& env, int s) {
  if (catchball_is_dead(env, s)) {
    throw std::invalid_argument("catchball_decode: dead state has no layout");
  }
  const int W = env.params.width;
  CatchballState st;
  st.paddle_col = s % W;
  st.ball_col = (s / W) % W;
  st.ball_row = s / (W * W);
  return st;
}

int catchball_index(const Env& env, int ball_row, int ball_col,
                    int paddle_col) {
  if (env.id != "catchball") {
    throw std::invalid_argument("catchball helper used on env " + env.id);
  }
  const int W = env.params.width;
  return (ball_row * W + ball_col) * W + paddle_col;
}

}  // namespace rlbd
