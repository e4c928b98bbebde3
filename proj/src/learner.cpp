#include "commgap/learner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "commgap/gap.hpp"

namespace commgap {

void ActionValueTable::check(int key, int action) const {
  if (key < 0 || key >= n_keys_) throw std::out_of_range("table key");
  if (action < 0 || action >= n_actions_) throw std::out_of_range("table action");
}

double ActionValueTable::max_at(int key) const {
  double best = at(key, 0);
  for (int a = 1; a < n_actions_; ++a) best = std::max(best, at(key, a));
  return best;
}

int greedy_action(const ActionValueTable& table, int key) {
  int best = 0;
  double best_v = table.at(key, 0);
  for (int a = 1; a < table.n_actions(); ++a) {
    double v = table.at(key, a);
    if (v > best_v) {
      best_v = v;
      best = a;
    }
  }
  return best;
}

double td_update(ActionValueTable& table, int key, int action, double reward, int next_key,
                 bool done, double lr, double gamma) {
  if (!(lr > 0.0 && lr <= 1.0)) throw std::invalid_argument("lr out of (0,1]");
  double y = reward;
  if (!done) y += gamma * table.max_at(next_key);
  double delta = lr * (y - table.at(key, action));
  table.at(key, action) += delta;
  table.touch(key);
  return delta;
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
  } else {
    data_[head_] = t;
    head_ = (head_ + 1) % capacity_;
  }
}

std::vector<Transition> replay_sample(const ReplayBuffer& buffer, int k1, Rng& rng) {
  if (buffer.size() == 0) throw std::invalid_argument("replay buffer empty");
  std::vector<Transition> out;
  out.reserve(k1);
  for (int i = 0; i < k1; ++i) out.push_back(buffer[rng.below(static_cast<int>(buffer.size()))]);
  return out;
}

void LearnConfig::validate() const {
  if (!(lr > 0.0 && lr <= 1.0)) throw std::invalid_argument("lr out of (0,1]");
  if (eps_start < 0.0 || eps_start > 1.0 || eps_end < 0.0 || eps_end > 1.0)
    throw std::invalid_argument("epsilon out of [0,1]");
  if (episodes < 1) throw std::invalid_argument("episodes < 1");
}

double LearnConfig::epsilon(int episode) const {
  double span = eps_decay_frac * episodes;
  if (span <= 0.0 || episode >= span) return eps_end;
  return eps_start + (eps_end - eps_start) * (episode / span);
}

ActionValueTable value_iteration(const DecPomdpSpec& env, double tol, int max_iters) {
  env.validate();
  const int ja = env.joint_action_count();
  const int jo = env.joint_obs_count();
  // joint observation must identify the non-terminal state
  std::vector<int> state_of(jo, -1);
  for (int s = 0; s < env.n_states; ++s) {
    if (env.is_terminal(s)) continue;
    int o = env.obs_of(s);
    if (state_of[o] != -1 && state_of[o] != s)
      throw std::invalid_argument("value_iteration: observation does not identify the state");
    state_of[o] = s;
  }

  std::vector<double> q(static_cast<std::size_t>(env.n_states) * ja, 0.0);
  std::vector<double> v(env.n_states, 0.0);
  auto backup = [&](std::vector<double>& out, const std::vector<double>& vin) {
    double residual = 0.0;
    for (int s = 0; s < env.n_states; ++s) {
      if (env.is_terminal(s)) continue;
      for (int a = 0; a < ja; ++a) {
        double acc = env.reward[s * ja + a];
        const double* row = &env.transition[(s * ja + a) * static_cast<std::size_t>(env.n_states)];
        for (int s2 = 0; s2 < env.n_states; ++s2)
          if (row[s2] != 0.0 && !env.is_terminal(s2)) acc += env.gamma * row[s2] * vin[s2];
        residual = std::max(residual, std::abs(acc - out[s * ja + a]));
        out[static_cast<std::size_t>(s) * ja + a] = acc;
      }
    }
    return residual;
  };
  auto refresh_v = [&] {
    for (int s = 0; s < env.n_states; ++s) {
      if (env.is_terminal(s)) { v[s] = 0.0; continue; }
      double best = q[static_cast<std::size_t>(s) * ja];
      for (int a = 1; a < ja; ++a) best = std::max(best, q[static_cast<std::size_t>(s) * ja + a]);
      v[s] = best;
    }
  };

  if (env.horizon > 0) {
    // Backward induction; q ends as the first-step action values.
    for (int t = env.horizon - 1; t >= 0; --t) {
      backup(q, v);
      refresh_v();
    }
  } else {
    int it = 0;
    for (;; ++it) {
      if (it >= max_iters) throw std::runtime_error("value_iteration did not converge");
      double residual = backup(q, v);
      refresh_v();
      if (residual <= tol) break;
    }
  }

  ActionValueTable table(jo, ja);
  for (int o = 0; o < jo; ++o) {
    if (state_of[o] < 0) continue;  // unreachable observation keeps zeros
    for (int a = 0; a < ja; ++a)
      table.at(o, a) = q[static_cast<std::size_t>(state_of[o]) * ja + a];
  }
  return table;
}

JointPolicy centralized_greedy_policy(const DecPomdpSpec& env, const ActionValueTable& table) {
  JointPolicy pi(env.joint_obs_count());
  for (int o = 0; o < env.joint_obs_count(); ++o) pi[o] = greedy_action(table, o);
  return pi;
}

int CommKeying::key_of(int agent, const std::vector<int>& joint_obs,
                       const std::vector<int>& /*obs_dims*/) const {
  int key = joint_obs[agent];
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (static_cast<int>(j) == agent) continue;
    key = key * alphabet_size + labels[j][joint_obs[j]];
  }
  return key;
}

int CommKeying::n_keys(int agent, const std::vector<int>& obs_dims) const {
  int n = obs_dims[agent];
  for (std::size_t j = 0; j < labels.size(); ++j)
    if (static_cast<int>(j) != agent) n *= alphabet_size;
  return n;
}

JointPolicy comm_greedy_joint_policy(const DecPomdpSpec& env, const CommKeying& keying,
                                     const std::vector<ActionValueTable>& per_agent) {
  JointPolicy pi(env.joint_obs_count());
  for (int o = 0; o < env.joint_obs_count(); ++o) {
    std::vector<int> local = split_index(o, env.obs_dims);
    std::vector<int> act(env.n_agents);
    for (int i = 0; i < env.n_agents; ++i)
      act[i] = greedy_action(per_agent[i], keying.key_of(i, local, env.obs_dims));
    pi[o] = joint_index(act, env.action_dims);
  }
  return pi;
}

JointPolicy independent_greedy_joint_policy(const DecPomdpSpec& env,
                                            const std::vector<ActionValueTable>& per_agent) {
  JointPolicy pi(env.joint_obs_count());
  for (int o = 0; o < env.joint_obs_count(); ++o) {
    std::vector<int> local = split_index(o, env.obs_dims);
    std::vector<int> act(env.n_agents);
    for (int i = 0; i < env.n_agents; ++i) act[i] = greedy_action(per_agent[i], local[i]);
    pi[o] = joint_index(act, env.action_dims);
  }
  return pi;
}

namespace {

// Common episode-driven Q-learning loop. The callbacks decide how actions are
// chosen and which tables get updated.
template <typename ActFn, typename UpdateFn, typename EvalFn>
std::vector<EvalPoint> q_learning_loop(const DecPomdpSpec& env, const LearnConfig& config,
                                       ActFn&& act, UpdateFn&& update, EvalFn&& evaluate) {
  config.validate();
  Rng rng(config.seed);
  std::vector<EvalPoint> curve;
  for (int ep = 0; ep < config.episodes; ++ep) {
    double eps = config.epsilon(ep);
    auto [state, obs] = reset(env, rng);
    bool done = false;
    int t = 0;
    while (!done) {
      int ja = act(state, eps, rng);
      StepResult sr = step_joint(env, state, ja, t, rng);
      update(sr.transition, ja);
      state = sr.next_state;
      done = sr.transition.done;
      ++t;
      if (env.horizon == 0 && t >= 1000) break;  // discounted-env episode cap
    }
    if (config.eval_every > 0 &&
        ((ep + 1) % config.eval_every == 0 || ep + 1 == config.episodes)) {
      curve.push_back({ep + 1, evaluate()});
    }
  }
  return curve;
}

}  // namespace

TrainResult train_centralized(const DecPomdpSpec& env, const LearnConfig& config) {
  const int ja = env.joint_action_count();
  TrainResult result;
  result.table = ActionValueTable(env.joint_obs_count(), ja);
  auto& q = result.table;

  result.curve = q_learning_loop(
      env, config,
      [&](int state, double eps, Rng& rng) {
        int o = env.obs_of(state);
        return rng.uniform() < eps ? rng.below(ja) : greedy_action(q, o);
      },
      [&](const Transition& tr, int ja_idx) {
        int key = joint_index(tr.joint_obs, env.obs_dims);
        int next_key = joint_index(tr.next_joint_obs, env.obs_dims);
        td_update(q, key, ja_idx, tr.reward, next_key, tr.done, config.lr, config.gamma);
      },
      [&] { return expected_return(env, centralized_greedy_policy(env, q), config.gamma); });
  return result;
}

TrainResult train_independent(const DecPomdpSpec& env, const LearnConfig& config) {
  TrainResult result;
  for (int i = 0; i < env.n_agents; ++i)
    result.per_agent.emplace_back(env.obs_dims[i], env.action_dims[i]);
  auto& tables = result.per_agent;

  result.curve = q_learning_loop(
      env, config,
      [&](int state, double eps, Rng& rng) {
        std::vector<int> act(env.n_agents);
        for (int i = 0; i < env.n_agents; ++i) {
          int o = env.observe[state * env.n_agents + i];
          act[i] = rng.uniform() < eps ? rng.below(env.action_dims[i])
                                       : greedy_action(tables[i], o);
        }
        return joint_index(act, env.action_dims);
      },
      [&](const Transition& tr, int ja_idx) {
        std::vector<int> act = split_index(ja_idx, env.action_dims);
        for (int i = 0; i < env.n_agents; ++i)
          td_update(tables[i], tr.joint_obs[i], act[i], tr.reward, tr.next_joint_obs[i], tr.done,
                    config.lr, config.gamma);
      },
      [&] {
        return expected_return(env, independent_greedy_joint_policy(env, tables), config.gamma);
      });
  return result;
}

TrainResult train_comm_conditioned(const DecPomdpSpec& env, const CommKeying& keying,
                                   const LearnConfig& config) {
  for (int j = 0; j < env.n_agents; ++j) {
    if (static_cast<int>(keying.labels[j].size()) != env.obs_dims[j])
      throw std::invalid_argument("message function must cover every observation");
    for (int label : keying.labels[j])
      if (label < 0 || label >= keying.alphabet_size)
        throw std::invalid_argument("message label out of alphabet");
  }
  TrainResult result;
  for (int i = 0; i < env.n_agents; ++i)
    result.per_agent.emplace_back(keying.n_keys(i, env.obs_dims), env.action_dims[i]);
  auto& tables = result.per_agent;

  result.curve = q_learning_loop(
      env, config,
      [&](int state, double eps, Rng& rng) {
        std::vector<int> local(env.n_agents);
        for (int i = 0; i < env.n_agents; ++i) local[i] = env.observe[state * env.n_agents + i];
        std::vector<int> act(env.n_agents);
        for (int i = 0; i < env.n_agents; ++i) {
          act[i] = rng.uniform() < eps
                       ? rng.below(env.action_dims[i])
                       : greedy_action(tables[i], keying.key_of(i, local, env.obs_dims));
        }
        return joint_index(act, env.action_dims);
      },
      [&](const Transition& tr, int ja_idx) {
        std::vector<int> act = split_index(ja_idx, env.action_dims);
        for (int i = 0; i < env.n_agents; ++i) {
          int key = keying.key_of(i, tr.joint_obs, env.obs_dims);
          int next_key = keying.key_of(i, tr.next_joint_obs, env.obs_dims);
          td_update(tables[i], key, act[i], tr.reward, next_key, tr.done, config.lr, config.gamma);
        }
      },
      [&] {
        return expected_return(env, comm_greedy_joint_policy(env, keying, tables), config.gamma);
      });
  return result;
}

}  // namespace commgap
