#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "commgap/env.hpp"

using namespace commgap;

TEST_CASE("reset on a single-state env always yields state 0") {
  DecPomdpSpec env;
  env.n_agents = 1;
  env.n_states = 1;
  env.action_dims = {1};
  env.obs_dims = {1};
  env.observe = {0};
  env.transition = {1.0};
  env.reward = {0.0};
  env.initial_dist = {1.0};
  env.horizon = 1;
  env.validate();
  Rng rng(7);
  for (int i = 0; i < 10; ++i) {
    auto [s, obs] = reset(env, rng);
    CHECK(s == 0);
    CHECK(obs == std::vector<int>{0});
  }
}

TEST_CASE("matrix game resets hit each joint observation with frequency 1/8") {
  DecPomdpSpec env = fig1_matrix_game().to_dec_pomdp();
  Rng rng(42);
  std::vector<int> counts(8, 0);
  const int n = 8000;
  for (int i = 0; i < n; ++i) {
    auto [s, obs] = reset(env, rng);
    ++counts[env.obs_of(s)];
  }
  for (int c : counts) CHECK(std::abs(c / double(n) - 0.125) < 0.02);
}

TEST_CASE("maze resets are deterministic per seed") {
  DecPomdpSpec env = MazeSpec{}.to_dec_pomdp();
  Rng a(123), b(123);
  for (int i = 0; i < 50; ++i) CHECK(reset(env, a).first == reset(env, b).first);
}

TEST_CASE("matrix game steps end immediately") {
  DecPomdpSpec env = fig1_matrix_game().to_dec_pomdp();
  Rng rng(1);
  auto [s, obs] = reset(env, rng);
  StepResult sr = step(env, s, {0, 0}, 0, rng);
  CHECK(sr.transition.done);
}

TEST_CASE("maze pays the high landmark reward when both agents arrive") {
  MazeSpec maze;
  DecPomdpSpec env = maze.to_dec_pomdp();
  Rng rng(1);
  // both agents at (0,1); agent cells are row*4+col
  int state = 1 * 16 + 1 * 4;  // agent 1 at (0,1), agent 2 at (1,0)
  StepResult sr = step(env, state, {2, 0}, 1, rng);  // left, up -> both reach (0,0)
  CHECK(sr.transition.reward == doctest::Approx(maze.r_high));
  CHECK(sr.transition.done);
}

TEST_CASE("maze wall moves clamp in place") {
  DecPomdpSpec env = MazeSpec{}.to_dec_pomdp();
  Rng rng(1);
  int state = 0 * 16 + 15;  // agent 1 at (0,0), agent 2 at (3,3)
  StepResult sr = step(env, state, {0, 1}, 0, rng);  // up into wall, down into wall
  CHECK(sr.transition.next_joint_obs[0] == 0);
  CHECK(sr.transition.next_joint_obs[1] == 15);
}

TEST_CASE("out-of-range actions are rejected") {
  DecPomdpSpec env = fig1_matrix_game().to_dec_pomdp();
  Rng rng(1);
  CHECK_THROWS_AS(step(env, 0, {2, 0}, 0, rng), std::out_of_range);
  CHECK_THROWS_AS(step(env, 0, {0, 1}, 0, rng), std::out_of_range);
}

TEST_CASE("matrix game serialization round-trips bit-exactly") {
  MatrixGameSpec game = gen_random_game({2, 4, 2, 1}, -3.5, 12.25, 99);
  std::string text = save_matrix_game(game);
  MatrixGameSpec back = load_matrix_game(text);
  CHECK(back.payoff == game.payoff);
  CHECK(back.obs_dist == game.obs_dist);
  CHECK(save_matrix_game(back) == text);
}

TEST_CASE("fig1 game file carries the expected first Q-vector column") {
  MatrixGameSpec game = fig1_matrix_game();
  CHECK(game.q(0, 0, 0, 0) == doctest::Approx(53.2));
  CHECK(game.q(0, 0, 1, 0) == doctest::Approx(42.9));
  CHECK(game.q(1, 0, 0, 0) == doctest::Approx(31.8));
  CHECK(game.q(1, 0, 1, 0) == doctest::Approx(22.9));
  // partial-observation row averages for agent 1 at o11
  double a11 = 0.0, a12 = 0.0;
  for (int o2 = 0; o2 < 4; ++o2) {
    a11 += game.q(0, o2, 0, 0) / 4.0;
    a12 += game.q(0, o2, 1, 0) / 4.0;
  }
  CHECK(a11 == doctest::Approx(29.125).epsilon(1e-12));
  CHECK(a12 == doctest::Approx(31.05).epsilon(1e-12));
}

TEST_CASE("degenerate 1x1x1x1 game is valid") {
  MatrixGameSpec game;
  game.obs_dims = {1, 1};
  game.action_dims = {1, 1};
  game.payoff = {0.0};
  game.obs_dist = {1.0};
  CHECK_NOTHROW(game.validate());
  CHECK_NOTHROW(game.to_dec_pomdp().validate());
}

TEST_CASE("non-normalized obs_dist is rejected") {
  MatrixGameSpec game;
  game.obs_dims = {1, 2};
  game.action_dims = {1, 1};
  game.payoff = {1.0, 2.0};
  game.obs_dist = {0.5, 0.4};
  CHECK_THROWS_AS(game.validate(), std::invalid_argument);
}

TEST_CASE("random game generation is deterministic and respects its range") {
  MatrixGameSpec a = gen_random_game({2, 4, 2, 1}, 0.0, 100.0, 7);
  MatrixGameSpec b = gen_random_game({2, 4, 2, 1}, 0.0, 100.0, 7);
  CHECK(a.payoff == b.payoff);
  for (double v : a.payoff) {
    CHECK(v >= 0.0);
    CHECK(v <= 100.0);
  }
}

TEST_CASE("1000 generated games are pairwise distinct") {
  std::set<std::string> seen;
  for (int i = 0; i < 1000; ++i)
    seen.insert(save_matrix_game(gen_random_game({2, 3, 2, 1}, 0.0, 100.0, 1000 + i)));
  CHECK(seen.size() == 1000);
}

TEST_CASE("identical seeds yield identical serialized episode traces") {
  DecPomdpSpec env = MazeSpec{}.to_dec_pomdp();
  auto trace = [&](std::uint64_t seed) {
    Rng rng(seed);
    std::string out;
    for (int ep = 0; ep < 20; ++ep) {
      auto [state, obs] = reset(env, rng);
      bool done = false;
      int t = 0;
      while (!done) {
        std::vector<int> act = {rng.below(5), rng.below(5)};
        StepResult sr = step(env, state, act, t, rng);
        out += std::to_string(state) + ":" + std::to_string(act[0]) + "," +
               std::to_string(act[1]) + ">" + std::to_string(sr.next_state) + "@" +
               std::to_string(sr.transition.reward) + ";";
        state = sr.next_state;
        done = sr.transition.done;
        ++t;
      }
    }
    return out;
  };
  CHECK(trace(5) == trace(5));
  CHECK(trace(5) != trace(6));
}

TEST_CASE("builtin environment ids resolve") {
  CHECK_NOTHROW(builtin_env("fig1-matrix"));
  CHECK_NOTHROW(builtin_env("maze-4x4"));
  CHECK_THROWS_AS(builtin_env("nope"), std::invalid_argument);
}
