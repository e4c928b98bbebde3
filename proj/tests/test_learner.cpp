#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "commgap/gap.hpp"
#include "commgap/learner.hpp"

using namespace commgap;

namespace {

// One state, one action, reward 1 every step, discount 0.95, infinite horizon.
DecPomdpSpec constant_reward_env() {
  DecPomdpSpec env;
  env.n_agents = 1;
  env.n_states = 1;
  env.action_dims = {1};
  env.obs_dims = {1};
  env.observe = {0};
  env.transition = {1.0};
  env.reward = {1.0};
  env.initial_dist = {1.0};
  env.gamma = 0.95;
  env.horizon = 0;
  env.id = "unit-loop";
  return env;
}

}  // namespace

TEST_CASE("greedy action breaks ties toward the lowest index") {
  ActionValueTable table(1, 3);
  table.at(0, 0) = 2.0;
  table.at(0, 1) = 5.0;
  table.at(0, 2) = 5.0;
  CHECK(greedy_action(table, 0) == 1);
  table.at(0, 0) = 5.0;
  CHECK(greedy_action(table, 0) == 0);
}

TEST_CASE("action value table rejects out-of-range keys") {
  ActionValueTable table(2, 2);
  CHECK_THROWS_AS(table.at(2, 0), std::out_of_range);
  CHECK_THROWS_AS(table.at(0, 2), std::out_of_range);
  CHECK_THROWS_AS(table.at(-1, 0), std::out_of_range);
}

TEST_CASE("repeated TD updates on a constant-reward loop converge to R/(1-gamma)") {
  ActionValueTable table(1, 1);
  for (int i = 0; i < 4000; ++i)
    td_update(table, 0, 0, 1.0, 0, false, 0.1, 0.95);
  CHECK(table.at(0, 0) == doctest::Approx(20.0).epsilon(1e-6));
}

TEST_CASE("a terminal TD backup does not bootstrap") {
  ActionValueTable table(1, 1);
  table.at(0, 0) = 0.0;
  td_update(table, 0, 0, 3.0, 0, true, 1.0, 0.95);
  CHECK(table.at(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("td_update returns the applied delta") {
  ActionValueTable table(1, 1);
  double d = td_update(table, 0, 0, 1.0, 0, true, 0.5, 0.9);
  CHECK(d == doctest::Approx(0.5));
  CHECK(table.at(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("replay buffer evicts oldest entries first") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    Transition t;
    t.reward = i;
    buf.push(t);
  }
  CHECK(buf.size() == 3);
  CHECK(buf[0].reward == doctest::Approx(2.0));
  CHECK(buf[1].reward == doctest::Approx(3.0));
  CHECK(buf[2].reward == doctest::Approx(4.0));
}

TEST_CASE("replay sampling from an empty buffer throws") {
  ReplayBuffer buf(3);
  Rng rng(1);
  CHECK_THROWS_AS(replay_sample(buf, 4, rng), std::invalid_argument);
}

TEST_CASE("replay sampling is uniform-ish and sized k1") {
  ReplayBuffer buf(4);
  for (int i = 0; i < 4; ++i) {
    Transition t;
    t.reward = i;
    buf.push(t);
  }
  Rng rng(9);
  auto samples = replay_sample(buf, 4000, rng);
  CHECK(samples.size() == 4000);
  std::vector<int> counts(4, 0);
  for (const auto& t : samples) ++counts[static_cast<int>(t.reward)];
  for (int c : counts) CHECK(std::abs(c / 4000.0 - 0.25) < 0.05);
}

TEST_CASE("epsilon schedule decays linearly then floors") {
  LearnConfig cfg;
  cfg.eps_start = 1.0;
  cfg.eps_end = 0.05;
  cfg.eps_decay_frac = 0.5;
  cfg.episodes = 1000;
  CHECK(cfg.epsilon(0) == doctest::Approx(1.0));
  CHECK(cfg.epsilon(250) == doctest::Approx(0.525));
  CHECK(cfg.epsilon(500) == doctest::Approx(0.05));
  CHECK(cfg.epsilon(999) == doctest::Approx(0.05));
}

TEST_CASE("value iteration matches the geometric-series value on the unit loop") {
  DecPomdpSpec env = constant_reward_env();
  ActionValueTable q = value_iteration(env);
  CHECK(q.at(0, 0) == doctest::Approx(20.0).epsilon(1e-10));
}

TEST_CASE("value iteration on the matrix game recovers per-joint-obs maxima") {
  MatrixGameSpec game = fig1_matrix_game();
  DecPomdpSpec env = game.to_dec_pomdp();
  ActionValueTable q = value_iteration(env);
  for (int o1 = 0; o1 < 2; ++o1)
    for (int o2 = 0; o2 < 4; ++o2) {
      int jo = o1 * 4 + o2;
      for (int a1 = 0; a1 < 2; ++a1)
        CHECK(q.at(jo, a1) == doctest::Approx(game.q(o1, o2, a1, 0)).epsilon(1e-12));
    }
}

TEST_CASE("exact return of the centralized greedy policy equals the full-observability optimum") {
  MatrixGameSpec game = fig1_matrix_game();
  DecPomdpSpec env = game.to_dec_pomdp();
  ActionValueTable q = value_iteration(env);
  JointPolicy policy = centralized_greedy_policy(env, q);
  CHECK(expected_return(env, policy) == doctest::Approx(full_observability_return(game)).epsilon(1e-12));
}

TEST_CASE("expected return agrees with Monte Carlo on a random maze policy") {
  DecPomdpSpec env = MazeSpec{}.to_dec_pomdp();
  JointPolicy policy(env.joint_obs_count());
  Rng rng(3);
  for (auto& a : policy) a = rng.below(env.joint_action_count());
  double exact = expected_return(env, policy);
  double mc = mc_return(env, policy, 60000, 17);
  CHECK(std::abs(exact - mc) < 0.02);
}

TEST_CASE("centralized training on the matrix game is deterministic per seed") {
  DecPomdpSpec env = fig1_matrix_game().to_dec_pomdp();
  LearnConfig cfg;
  cfg.episodes = 400;
  cfg.eval_every = 100;
  cfg.seed = 11;
  TrainResult a = train_centralized(env, cfg);
  TrainResult b = train_centralized(env, cfg);
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].episode == b.curve[i].episode);
    CHECK(a.curve[i].mean_return == b.curve[i].mean_return);
  }
  for (int k = 0; k < a.table.n_keys(); ++k)
    for (int j = 0; j < a.table.n_actions(); ++j)
      CHECK(a.table.at(k, j) == b.table.at(k, j));
}

TEST_CASE("centralized Q-learning reaches the optimum on the matrix game") {
  MatrixGameSpec game = fig1_matrix_game();
  DecPomdpSpec env = game.to_dec_pomdp();
  LearnConfig cfg;
  cfg.episodes = 6000;
  cfg.eval_every = 2000;
  cfg.seed = 5;
  TrainResult r = train_centralized(env, cfg);
  JointPolicy policy = centralized_greedy_policy(env, r.table);
  CHECK(expected_return(env, policy) == doctest::Approx(full_observability_return(game)).epsilon(1e-9));
}

TEST_CASE("comm keying with identity messages reproduces the joint observation space") {
  DecPomdpSpec env = fig1_matrix_game().to_dec_pomdp();
  CommKeying keying;
  keying.alphabet_size = 4;
  keying.labels = {{0, 1}, {0, 1, 2, 3}};
  CHECK(keying.n_keys(0, env.obs_dims) == 2 * 4);
  CHECK(keying.n_keys(1, env.obs_dims) == 4 * 4);
  std::vector<int> jo = {1, 3};
  CHECK(keying.key_of(0, jo, env.obs_dims) == 1 * 4 + 3);
  CHECK(keying.key_of(1, jo, env.obs_dims) == 3 * 4 + 1);
}

TEST_CASE("comm-conditioned training with identity labels matches centralized value") {
  MatrixGameSpec game = fig1_matrix_game();
  DecPomdpSpec env = game.to_dec_pomdp();
  CommKeying keying;
  keying.alphabet_size = 4;
  keying.labels = {{0, 1}, {0, 1, 2, 3}};
  LearnConfig cfg;
  cfg.episodes = 8000;
  cfg.eval_every = 4000;
  cfg.seed = 21;
  TrainResult r = train_comm_conditioned(env, keying, cfg);
  JointPolicy policy = comm_greedy_joint_policy(env, keying, r.per_agent);
  CHECK(expected_return(env, policy) == doctest::Approx(full_observability_return(game)).epsilon(1e-9));
}

TEST_CASE("learn config rejects invalid settings") {
  LearnConfig cfg;
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = LearnConfig{};
  cfg.episodes = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = LearnConfig{};
  cfg.eps_start = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
