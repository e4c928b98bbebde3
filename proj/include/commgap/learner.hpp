#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "commgap/env.hpp"
#include "commgap/rng.hpp"

namespace commgap {

// Dense tabular action-value function over a declared key space. Keys are the
// caller's conditioning tuples flattened to integers (joint observation for a
// centralized table, (o_i, labels of others) for a communication-conditioned
// one, o_i for an independent one).
class ActionValueTable {
 public:
  ActionValueTable() = default;
  ActionValueTable(int n_keys, int n_actions)
      : n_keys_(n_keys), n_actions_(n_actions),
        values_(static_cast<std::size_t>(n_keys) * n_actions, 0.0), visits_(n_keys, 0) {}

  int n_keys() const { return n_keys_; }
  int n_actions() const { return n_actions_; }

  double at(int key, int action) const {
    check(key, action);
    return values_[static_cast<std::size_t>(key) * n_actions_ + action];
  }
  double& at(int key, int action) {
    check(key, action);
    return values_[static_cast<std::size_t>(key) * n_actions_ + action];
  }
  int visits(int key) const { return visits_[static_cast<std::size_t>(key)]; }
  void touch(int key) { ++visits_[static_cast<std::size_t>(key)]; }

  double max_at(int key) const;

 private:
  void check(int key, int action) const;
  int n_keys_ = 0;
  int n_actions_ = 0;
  std::vector<double> values_;
  std::vector<int> visits_;
};

// Greedy argmax with deterministic lowest-index tie-break.
int greedy_action(const ActionValueTable& table, int key);

// One TD(0) backup: y = r + gamma * max_a' Q(next_key, a') (no bootstrap when
// done); Q(key, action) += lr * (y - Q). Returns the applied delta.
double td_update(ActionValueTable& table, int key, int action, double reward, int next_key,
                 bool done, double lr, double gamma);

// FIFO ring of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}
  void push(const Transition& t);
  std::size_t size() const { return data_.size(); }
  const Transition& operator[](std::size_t i) const { return data_[(head_ + i) % data_.size()]; }

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // index of oldest element once full
  std::vector<Transition> data_;
};

// Uniform with replacement; throws std::invalid_argument on an empty buffer.
std::vector<Transition> replay_sample(const ReplayBuffer& buffer, int k1, Rng& rng);

struct LearnConfig {
  double lr = 0.1;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay_frac = 0.5;  // linear decay over this fraction of episodes
  double gamma = 0.95;
  int episodes = 20000;
  int k1 = 256;
  int eval_every = 500;
  std::size_t replay_capacity = 100000;
  std::uint64_t seed = 1;

  void validate() const;
  double epsilon(int episode) const;
};

struct EvalPoint {
  int episode;
  double mean_return;
};

struct TrainResult {
  ActionValueTable table;                   // centralized, keyed by joint observation
  std::vector<ActionValueTable> per_agent;  // empty for centralized training
  std::vector<EvalPoint> curve;
};

// Deterministic joint policy: joint observation index -> joint action index.
using JointPolicy = std::vector<int>;

// Exact planning oracle. Keys the result by joint observation, which must be in
// bijection with non-terminal states (true for all built-in environments).
// horizon == 0: value iteration to sup-norm residual <= tol; horizon >= 1:
// backward induction, returning the first-step table.
ActionValueTable value_iteration(const DecPomdpSpec& env, double tol = 1e-12,
                                 int max_iters = 1000000);

// Centralized Q-learning over joint observations (the full-observability
// baseline). Evaluation curve uses exact expected return of the greedy policy.
TrainResult train_centralized(const DecPomdpSpec& env, const LearnConfig& config);

// Independent Q-learning: per-agent tables keyed by the local observation only.
TrainResult train_independent(const DecPomdpSpec& env, const LearnConfig& config);

// Per-agent message functions are supplied as observation -> label maps (one
// per agent); agent i's table is keyed by (o_i, labels of all other agents).
struct CommKeying {
  std::vector<std::vector<int>> labels;  // labels[j][o_j]
  int alphabet_size = 1;

  int key_of(int agent, const std::vector<int>& joint_obs, const std::vector<int>& obs_dims) const;
  int n_keys(int agent, const std::vector<int>& obs_dims) const;
};

TrainResult train_comm_conditioned(const DecPomdpSpec& env, const CommKeying& keying,
                                   const LearnConfig& config);

// Lower a set of per-agent greedy policies (comm-conditioned) to a joint policy
// for exact evaluation.
JointPolicy comm_greedy_joint_policy(const DecPomdpSpec& env, const CommKeying& keying,
                                     const std::vector<ActionValueTable>& per_agent);
JointPolicy centralized_greedy_policy(const DecPomdpSpec& env, const ActionValueTable& table);
JointPolicy independent_greedy_joint_policy(const DecPomdpSpec& env,
                                            const std::vector<ActionValueTable>& per_agent);

}  // namespace commgap
