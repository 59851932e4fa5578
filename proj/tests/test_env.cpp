#include "rlbd/env.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "doctest.h"
#include "rlbd/mdp.hpp"
#include "rlbd/rng.hpp"

using namespace rlbd;

TEST_CASE("catchball observations have exactly two lit cells on live states") {
  Env env = make_env("catchball", {.height = 8, .width = 8, .horizon = 13});
  CHECK(env.obs_rows == 8);
  CHECK(env.obs_cols == 8);
  CHECK_NOTHROW(env.mdp.validate());

  int dead_seen = 0;
  for (int s : env.reachable_states()) {
    GridObservation obs = env.observe(s);
    int lit = 0;
    for (double p : obs.pixels) {
      CHECK(p >= 0.0);
      CHECK(p <= 1.0);
      if (p != 0.0) ++lit;
    }
    if (catchball_is_dead(env, s)) {
      ++dead_seen;
      CHECK(lit == 0);
    } else {
      CHECK(lit == 2);
    }
  }
  CHECK(dead_seen == 1);  // the miss sink is reachable
}

TEST_CASE("observations are injective over the reachable set") {
  for (const char* id : {"catchball", "goalgrid", "chain3"}) {
    Env env = make_env(id, {});
    std::set<std::vector<double>> seen;
    for (int s : env.reachable_states()) {
      seen.insert(env.observe(s).pixels);
    }
    CHECK(seen.size() == env.reachable_states().size());
  }
}

TEST_CASE("catchball optimal play catches every drop") {
  // 8x8 board, horizon 13 => 14 steps = exactly 2 drop cycles of 7.
  Env env = make_env("catchball", {.height = 8, .width = 8, .horizon = 13});
  Solution sol = value_iteration(env.mdp);
  CHECK(start_value(sol.tables, env.mdp) == doctest::Approx(2.0).epsilon(1e-12));
  // Every spawn is catchable from every reachable paddle position.
  for (int s : env.reachable_states()) {
    if (catchball_is_dead(env, s)) continue;
    auto st = catchball_decode(env, s);
    if (st.ball_row == 0) {
      CHECK(sol.tables.v[0][s] == doctest::Approx(2.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("catchball decision row: stay is uniquely optimal when aligned") {
  Env env = make_env("catchball", {.height = 8, .width = 8, .horizon = 139});
  Solution sol = value_iteration(env.mdp);
  const int stay = env.action_index("stay");
  const int fire = env.action_index("fire");
  // Aligned decision states (ball one row above the paddle row, same column):
  // staying catches, firing fumbles, moving walks away. With rounds left the
  // optimal set must be exactly {stay}.
  int checked = 0;
  for (int s : env.reachable_states()) {
    if (catchball_is_dead(env, s)) continue;
    auto st = catchball_decode(env, s);
    if (st.ball_row == 6 && st.ball_col == st.paddle_col) {
      CHECK(sol.policy.action_sets[s] == std::vector<int>{stay});
      CHECK(sol.tables.q[0][s * env.mdp.n_actions + fire] <
            sol.tables.v[0][s]);
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("catchball miss is terminal: the dead state absorbs and pays zero") {
  Env env = make_env("catchball", {});
  int dead = -1;
  for (int s : env.reachable_states()) {
    if (catchball_is_dead(env, s)) dead = s;
  }
  REQUIRE(dead >= 0);
  for (int a = 0; a < env.mdp.n_actions; ++a) {
    CHECK(env.mdp.r(dead, a) == 0.0);
    CHECK(env.mdp.p(dead, a, dead) == 1.0);
  }
}

TEST_CASE("goalgrid reaches the corner goal and farms it") {
  Env env = make_env("goalgrid", {.height = 5, .width = 5, .horizon = 16});
  Solution sol = value_iteration(env.mdp);
  // Manhattan distance 8 from (0,0) to (4,4); reward flows at t = 8..16.
  CHECK(start_value(sol.tables, env.mdp) == doctest::Approx(9.0).epsilon(1e-12));
  CHECK(env.min_positive_reward == doctest::Approx(1.0));
}

TEST_CASE("chain3 env wraps the canonical three-state chain") {
  Env env = make_env("chain3", {});
  CHECK(env.mdp.n_states == 3);
  CHECK(env.mdp.n_actions == 2);
  CHECK(env.mdp.horizon == 2);
  Solution sol = value_iteration(env.mdp);
  CHECK(sol.tables.v[0][0] == doctest::Approx(1.0));
  GridObservation obs = env.observe(1);
  CHECK(obs.rows == 1);
  CHECK(obs.cols == 4);
  CHECK(obs.pixels == std::vector<double>{0.0, 1.0, 0.0, 0.0});
  CHECK(env.target_predicate(0));
  CHECK_FALSE(env.target_predicate(2));
}

TEST_CASE("target predicate marks the decisive approach band") {
  Env env = make_env("catchball", {});
  for (int s : env.reachable_states()) {
    bool expect = false;
    if (!catchball_is_dead(env, s)) {
      auto st = catchball_decode(env, s);
      expect = st.ball_row >= 5;  // within two rows of the paddle row
    }
    CHECK(env.target_predicate(s) == expect);
  }
}

TEST_CASE("inject_trigger adds and clamps, and is idempotent at saturation") {
  Env env = make_env("catchball", {});
  GridObservation obs = env.observe(env.reachable_states().front());
  Trigger t;
  t.row = 0;
  t.col = 0;
  t.rows = 2;
  t.cols = 2;
  t.patch = {1.0, 1.0, 1.0, 1.0};
  GridObservation once = inject_trigger(obs, t);
  GridObservation twice = inject_trigger(once, t);
  CHECK(once.pixels == twice.pixels);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      CHECK(once.at(r, c) == 1.0);
    }
  }
  // Negative patch values darken but never drop below zero.
  Trigger neg = t;
  neg.patch = {-1.0, -1.0, -1.0, -1.0};
  GridObservation dark = inject_trigger(once, neg);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      CHECK(dark.at(r, c) == 0.0);
    }
  }
}

TEST_CASE("inject_trigger rejects out-of-bounds patches") {
  Env env = make_env("chain3", {});
  GridObservation obs = env.observe(0);
  Trigger t;
  t.row = 0;
  t.col = 3;
  t.rows = 1;
  t.cols = 2;  // spills past the 1x4 strip
  t.patch = {0.5, 0.5};
  CHECK_THROWS_AS(inject_trigger(obs, t), std::invalid_argument);
}

TEST_CASE("trigger separation on an always-dark region is monotone") {
  Env env = make_env("catchball", {});
  // Column 0 above the paddle row is never lit: the ball lives in columns
  // 1..6 and the paddle on row 7.
  for (int s : env.reachable_states()) {
    if (catchball_is_dead(env, s)) continue;
    GridObservation obs = env.observe(s);
    CHECK(obs.at(0, 0) == 0.0);
    CHECK(obs.at(1, 0) == 0.0);
  }
  std::vector<bool> verdicts;
  for (double intensity : {0.0, 0.4, 1.0}) {
    Trigger t;
    t.row = 0;
    t.col = 0;
    t.rows = 2;
    t.cols = 1;
    t.patch = {intensity, intensity};
    verdicts.push_back(check_trigger_separation(env, t));
  }
  CHECK_FALSE(verdicts[0]);  // zero patch leaves natural observations natural
  CHECK(verdicts[1]);
  CHECK(verdicts[2]);
  CHECK(std::is_sorted(verdicts.begin(), verdicts.end()));
}

TEST_CASE("zero-reward environments are rejected") {
  Env env = make_env("chain3", {});
  TabularMdp zero = env.mdp;
  std::fill(zero.reward.begin(), zero.reward.end(), 0.0);
  CHECK_THROWS_AS(min_positive_reward_of(zero), std::invalid_argument);
  CHECK(min_positive_reward_of(env.mdp) == doctest::Approx(1.0));
}

TEST_CASE("make_env validates ids and dimensions") {
  CHECK_THROWS_AS(make_env("pong", {}), std::invalid_argument);
  CHECK_THROWS_AS(make_env("catchball", {.height = 17, .width = 8}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_env("catchball", {.height = 8, .width = 3}),
                  std::invalid_argument);
  CHECK_THROWS_AS(make_env("catchball", {.height = 8, .width = 8, .drift = 2}),
                  std::invalid_argument);
}

TEST_CASE("drifting ball wraps columns and stays catchable") {
  Env env = make_env("catchball",
                     {.height = 8, .width = 8, .horizon = 13, .drift = 1});
  CHECK_NOTHROW(env.mdp.validate());
  Solution sol = value_iteration(env.mdp);
  CHECK(start_value(sol.tables, env.mdp) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("pgm export writes an inspectable grayscale file") {
  Env env = make_env("catchball", {});
  GridObservation obs = env.observe(env.reachable_states().front());
  std::filesystem::path p =
      std::filesystem::temp_directory_path() / "rlbd_obs.pgm";
  write_pgm(obs, p.string());
  std::ifstream f(p);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  CHECK(magic == "P2");
  CHECK(w == 8);
  CHECK(h == 8);
  CHECK(maxval == 255);
  int count = 0, v = 0, lit = 0;
  while (f >> v) {
    ++count;
    if (v != 0) ++lit;
    CHECK(v >= 0);
    CHECK(v <= 255);
  }
  CHECK(count == 64);
  CHECK(lit == 2);
  std::filesystem::remove(p);
}

TEST_CASE("return bounds anchor the metric range") {
  Env env = make_env("catchball", {.height = 8, .width = 8, .horizon = 139});
  CHECK(env.return_min == 0.0);
  CHECK(env.return_max == doctest::Approx(20.0));
  // 8x8 default: 14 moves to the corner, goal held for decisions 14..16.
  Env gg = make_env("goalgrid", {});
  CHECK(gg.return_min == 0.0);
  CHECK(gg.return_max == doctest::Approx(3.0));
}
