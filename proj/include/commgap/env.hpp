#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "commgap/rng.hpp"

namespace commgap {

// Mixed-radix index helpers: agent 0 is the outermost digit.
int joint_index(const std::vector<int>& digits, const std::vector<int>& dims);
std::vector<int> split_index(int joint, const std::vector<int>& dims);
int dims_product(const std::vector<int>& dims);

// Finite Dec-POMDP with exact tabular dynamics. Rows are flat:
//   observe[s * n_agents + i]                -> local observation of agent i
//   transition[(s * JA + ja) * n_states + s'] -> P(s' | s, ja)
//   reward[s * JA + ja]
// horizon == 0 means infinite horizon with discounting.
struct DecPomdpSpec {
  int n_agents = 0;
  int n_states = 0;
  std::vector<int> action_dims;
  std::vector<int> obs_dims;
  std::vector<int> observe;
  std::vector<double> transition;
  std::vector<double> reward;
  std::vector<double> initial_dist;
  std::vector<char> terminal;  // optional absorbing states; empty = none
  double gamma = 0.95;
  int horizon = 0;
  std::string id;

  int joint_action_count() const { return dims_product(action_dims); }
  int joint_obs_count() const { return dims_product(obs_dims); }
  bool is_terminal(int s) const { return !terminal.empty() && terminal[s]; }

  // Joint observation index of a state.
  int obs_of(int s) const;

  // Throws std::invalid_argument on any violated invariant (probability rows
  // not summing to 1 within 1e-12, negative entries, non-finite rewards,
  // missing observation entries).
  void validate() const;
};

struct Transition {
  std::vector<int> joint_obs;
  std::vector<int> joint_action;
  double reward = 0.0;
  std::vector<int> next_joint_obs;
  bool done = false;
};

struct StepResult {
  Transition transition;
  int next_state = 0;
};

// Samples the initial state from mu and reads off the local observations.
std::pair<int, std::vector<int>> reset(const DecPomdpSpec& env, Rng& rng);

// One environment step. `t` is the number of steps already taken this episode
// (used for the horizon cutoff). Throws std::out_of_range on bad indices.
StepResult step(const DecPomdpSpec& env, int state, const std::vector<int>& joint_action,
                int t, Rng& rng);
StepResult step_joint(const DecPomdpSpec& env, int state, int joint_action, int t, Rng& rng);

// Two-agent one-step matrix game: payoff[o1][o2][a1][a2] flattened row-major,
// obs_dist over (o1, o2) joint observations.
struct MatrixGameSpec {
  std::vector<int> obs_dims;     // {|O1|, |O2|}
  std::vector<int> action_dims;  // {|A1|, |A2|}
  std::vector<double> payoff;
  std::vector<double> obs_dist;
  double gamma = 0.95;
  std::string id;

  double q(int o1, int o2, int a1, int a2) const {
    return payoff[((o1 * obs_dims[1] + o2) * action_dims[0] + a1) * action_dims[1] + a2];
  }
  double p(int o1, int o2) const { return obs_dist[o1 * obs_dims[1] + o2]; }

  void validate() const;
  DecPomdpSpec to_dec_pomdp() const;
};

// JSON (de)serialization; round-trips bit-exactly. Throws std::invalid_argument
// on dimension mismatches or a non-normalized obs_dist.
MatrixGameSpec load_matrix_game(const std::string& text);
std::string save_matrix_game(const MatrixGameSpec& game);

// The built-in two-agent illustrative game: 2 x 4 observations, 2 x 1 actions,
// uniform observation distribution.
MatrixGameSpec fig1_matrix_game();

// Seeded generator for one-step games: payoffs i.i.d. uniform in
// [payoff_lo, payoff_hi], uniform obs_dist.
MatrixGameSpec gen_random_game(const std::vector<int>& sizes, double payoff_lo,
                               double payoff_hi, std::uint64_t seed);

// 4x4 two-agent grid maze. Landmark A at cell (0,0) pays r_high, landmark B at
// cell (2,2) pays r_low; the team is rewarded once, on the first step both
// agents co-occupy a landmark, and the episode ends there or after `horizon`
// steps. Actions: up, down, left, right, stay; moves into walls clamp.
struct MazeSpec {
  double r_high = 1.0;
  double r_low = 0.5;
  double gamma = 0.95;
  int horizon = 3;

  static constexpr int kSide = 4;
  static constexpr int kCells = kSide * kSide;

  DecPomdpSpec to_dec_pomdp() const;
};

// Builtin environments addressable by id: "fig1-matrix", "maze-4x4".
DecPomdpSpec builtin_env(const std::string& id);

}  // namespace commgap
