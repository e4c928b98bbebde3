#include "commgap/cluster_comm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace commgap {

ClusterCommResult train_cluster_comm(const DecPomdpSpec& env, const ClusterCommConfig& comm_config,
                                     const LearnConfig& learn_config) {
  learn_config.validate();
  const int n_agents = env.n_agents;
  const int alphabet = comm_config.alphabet_size;

  ClusterCommResult result;
  result.keying.alphabet_size = alphabet;
  result.keying.labels.resize(n_agents);
  result.message_fns.resize(n_agents);
  for (int j = 0; j < n_agents; ++j) {
    result.message_fns[j] = MessageFunction::constant(j, env.obs_dims[j]);
    result.message_fns[j].agent = j;
    result.keying.labels[j].assign(env.obs_dims[j], 0);
  }
  result.centralized = ActionValueTable(env.joint_obs_count(), env.joint_action_count());
  for (int i = 0; i < n_agents; ++i)
    result.per_agent.emplace_back(result.keying.n_keys(i, env.obs_dims), env.action_dims[i]);

  ReplayBuffer buffer(learn_config.replay_capacity);
  Rng rng(learn_config.seed);
  Rng refit_rng(learn_config.seed ^ 0xc2b2ae3d27d4eb4full);

  const int episodes = learn_config.episodes;
  int next_refit = std::max(1, static_cast<int>(comm_config.warmup_frac * episodes));
  const int refit_every = std::max(1, static_cast<int>(comm_config.refit_frac * episodes));

  // Rebuilds agent i's table from the centralized estimate: for a key
  // (o_i, labels of others), average over the consistent other-observations
  // (weighted by empirical co-occurrence counts from the replay buffer) of the
  // joint value maximized over the other agents' actions. Keeps the
  // decentralized tables meaningful across label reassignments.
  auto project_tables = [&] {
    // Recent transitions reflect the current (mostly greedy) behavior better,
    // so only the newest half of the buffer feeds the co-occurrence counts.
    std::vector<double> co(static_cast<std::size_t>(env.joint_obs_count()), 0.0);
    for (std::size_t t = buffer.size() / 2; t < buffer.size(); ++t)
      co[joint_index(buffer[t].joint_obs, env.obs_dims)] += 1.0;
    const int jo_count = env.joint_obs_count();
    const int ja_count = env.joint_action_count();
    for (int i = 0; i < n_agents; ++i) {
      ActionValueTable fresh(result.keying.n_keys(i, env.obs_dims), env.action_dims[i]);
      std::vector<double> mass(fresh.n_keys(), 0.0);
      for (int jo = 0; jo < jo_count; ++jo) {
        double w = co[jo];
        if (w <= 0.0) continue;
        std::vector<int> local = split_index(jo, env.obs_dims);
        int key = result.keying.key_of(i, local, env.obs_dims);
        mass[key] += w;
        for (int ai = 0; ai < env.action_dims[i]; ++ai) {
          double best = -std::numeric_limits<double>::infinity();
          for (int ja = 0; ja < ja_count; ++ja)
            if (split_index(ja, env.action_dims)[i] == ai)
              best = std::max(best, result.centralized.at(jo, ja));
          fresh.at(key, ai) += w * best;
        }
      }
      for (int key = 0; key < fresh.n_keys(); ++key) {
        if (mass[key] > 0.0)
          for (int ai = 0; ai < env.action_dims[i]; ++ai) fresh.at(key, ai) /= mass[key];
      }
      // Keys never observed keep the uniform average over consistent rows.
      for (int jo = 0; jo < jo_count; ++jo) {
        std::vector<int> local = split_index(jo, env.obs_dims);
        int key = result.keying.key_of(i, local, env.obs_dims);
        if (mass[key] > 0.0) continue;
        int consistent = 0;
        for (int jo2 = 0; jo2 < jo_count; ++jo2) {
          std::vector<int> l2 = split_index(jo2, env.obs_dims);
          if (result.keying.key_of(i, l2, env.obs_dims) != key) continue;
          ++consistent;
          for (int ai = 0; ai < env.action_dims[i]; ++ai) {
            double best = -std::numeric_limits<double>::infinity();
            for (int ja = 0; ja < ja_count; ++ja)
              if (split_index(ja, env.action_dims)[i] == ai)
                best = std::max(best, result.centralized.at(jo2, ja));
            fresh.at(key, ai) += best;
          }
        }
        if (consistent > 0)
          for (int ai = 0; ai < env.action_dims[i]; ++ai) fresh.at(key, ai) /= consistent;
      }
      result.per_agent[i] = std::move(fresh);
    }
  };

  auto refit = [&] {
    if (buffer.size() == 0) return;
    for (int j = 0; j < n_agents; ++j) {
      RimConfig cfg = comm_config.rim;
      cfg.k_neighbors = std::min(cfg.k_neighbors, env.obs_dims[j] - 1);
      cfg.seed = refit_rng.raw();
      QVectorSet raw = build_qvectors_sampled(result.centralized, buffer, j, env.obs_dims,
                                              env.action_dims, cfg, refit_rng);
      QVectorSet clustered = normalize_activation(raw, comm_config.activation);
      result.message_fns[j] = fit_messages(clustered, raw.weights, alphabet, cfg);
      result.keying.labels[j] = result.message_fns[j].hard_labels();
    }
    project_tables();
  };

  for (int ep = 0; ep < episodes; ++ep) {
    if (alphabet > 1 && ep + 1 >= next_refit) {
      refit();
      next_refit += refit_every;
    }
    double eps = learn_config.epsilon(ep);
    auto [state, obs] = reset(env, rng);
    bool done = false;
    int t = 0;
    while (!done) {
      std::vector<int> local(n_agents);
      for (int i = 0; i < n_agents; ++i) local[i] = env.observe[state * n_agents + i];
      std::vector<int> act(n_agents);
      for (int i = 0; i < n_agents; ++i) {
        act[i] = rng.uniform() < eps
                     ? rng.below(env.action_dims[i])
                     : greedy_action(result.per_agent[i],
                                     result.keying.key_of(i, local, env.obs_dims));
      }
      int ja = joint_index(act, env.action_dims);
      StepResult sr = step_joint(env, state, ja, t, rng);
      const Transition& tr = sr.transition;
      buffer.push(tr);

      int ckey = joint_index(tr.joint_obs, env.obs_dims);
      int cnext = joint_index(tr.next_joint_obs, env.obs_dims);
      td_update(result.centralized, ckey, ja, tr.reward, cnext, tr.done, learn_config.lr,
                learn_config.gamma);
      for (int i = 0; i < n_agents; ++i) {
        int key = result.keying.key_of(i, tr.joint_obs, env.obs_dims);
        int next_key = result.keying.key_of(i, tr.next_joint_obs, env.obs_dims);
        td_update(result.per_agent[i], key, act[i], tr.reward, next_key, tr.done, learn_config.lr,
                  learn_config.gamma);
      }
      state = sr.next_state;
      done = tr.done;
      ++t;
      if (env.horizon == 0 && t >= 1000) break;
    }
    if (learn_config.eval_every > 0 &&
        ((ep + 1) % learn_config.eval_every == 0 || ep + 1 == episodes)) {
      double j = expected_return(env, comm_greedy_joint_policy(env, result.keying, result.per_agent),
                                 learn_config.gamma);
      result.curve.push_back({ep + 1, j});
    }
  }
  return result;
}

}  // namespace commgap
