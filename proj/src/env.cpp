#include "commgap/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace commgap {

namespace {
constexpr double kProbTol = 1e-12;

void check_prob_row(const double* row, int n, const char* what) {
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    if (row[i] < 0.0) throw std::invalid_argument(std::string(what) + ": negative entry");
    sum += row[i];
  }
  if (std::abs(sum - 1.0) > kProbTol)
    throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
}
}  // namespace

int joint_index(const std::vector<int>& digits, const std::vector<int>& dims) {
  int idx = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) idx = idx * dims[i] + digits[i];
  return idx;
}

std::vector<int> split_index(int joint, const std::vector<int>& dims) {
  std::vector<int> digits(dims.size());
  for (std::size_t i = dims.size(); i-- > 0;) {
    digits[i] = joint % dims[i];
    joint /= dims[i];
  }
  return digits;
}

int dims_product(const std::vector<int>& dims) {
  int p = 1;
  for (int d : dims) p *= d;
  return p;
}

int DecPomdpSpec::obs_of(int s) const {
  std::vector<int> local(n_agents);
  for (int i = 0; i < n_agents; ++i) local[i] = observe[s * n_agents + i];
  return joint_index(local, obs_dims);
}

void DecPomdpSpec::validate() const {
  if (n_agents <= 0 || n_states <= 0) throw std::invalid_argument("empty spec");
  if (static_cast<int>(action_dims.size()) != n_agents ||
      static_cast<int>(obs_dims.size()) != n_agents)
    throw std::invalid_argument("per-agent dims mismatch");
  if (static_cast<int>(observe.size()) != n_states * n_agents)
    throw std::invalid_argument("observe table incomplete");
  const int ja = joint_action_count();
  if (static_cast<int>(transition.size()) != n_states * ja * n_states)
    throw std::invalid_argument("transition table size mismatch");
  if (static_cast<int>(reward.size()) != n_states * ja)
    throw std::invalid_argument("reward table size mismatch");
  if (static_cast<int>(initial_dist.size()) != n_states)
    throw std::invalid_argument("initial distribution size mismatch");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma out of range");
  if (gamma == 1.0 && horizon == 0)
    throw std::invalid_argument("gamma = 1 requires a finite horizon");
  check_prob_row(initial_dist.data(), n_states, "initial_dist");
  for (int s = 0; s < n_states; ++s) {
    for (int i = 0; i < n_agents; ++i) {
      int o = observe[s * n_agents + i];
      if (o < 0 || o >= obs_dims[i]) throw std::invalid_argument("observation out of range");
    }
    for (int a = 0; a < ja; ++a) {
      check_prob_row(&transition[(s * ja + a) * static_cast<std::size_t>(n_states)], n_states,
                     "transition");
      if (!std::isfinite(reward[s * ja + a])) throw std::invalid_argument("non-finite reward");
    }
  }
}

std::pair<int, std::vector<int>> reset(const DecPomdpSpec& env, Rng& rng) {
  int s = rng.categorical(env.initial_dist, env.n_states);
  std::vector<int> obs(env.n_agents);
  for (int i = 0; i < env.n_agents; ++i) obs[i] = env.observe[s * env.n_agents + i];
  return {s, obs};
}

StepResult step_joint(const DecPomdpSpec& env, int state, int joint_action, int t, Rng& rng) {
  if (state < 0 || state >= env.n_states) throw std::out_of_range("state index");
  if (joint_action < 0 || joint_action >= env.joint_action_count())
    throw std::out_of_range("action index");
  const int ja = env.joint_action_count();
  const double* row = &env.transition[(state * ja + joint_action) * static_cast<std::size_t>(env.n_states)];
  int next = rng.categorical(row, env.n_states);

  StepResult out;
  out.next_state = next;
  Transition& tr = out.transition;
  tr.joint_obs.resize(env.n_agents);
  tr.next_joint_obs.resize(env.n_agents);
  for (int i = 0; i < env.n_agents; ++i) {
    tr.joint_obs[i] = env.observe[state * env.n_agents + i];
    tr.next_joint_obs[i] = env.observe[next * env.n_agents + i];
  }
  tr.joint_action = split_index(joint_action, env.action_dims);
  tr.reward = env.reward[state * ja + joint_action];
  tr.done = env.is_terminal(next) || (env.horizon > 0 && t + 1 >= env.horizon);
  return out;
}

StepResult step(const DecPomdpSpec& env, int state, const std::vector<int>& joint_action, int t,
                Rng& rng) {
  if (static_cast<int>(joint_action.size()) != env.n_agents)
    throw std::out_of_range("joint action arity");
  for (int i = 0; i < env.n_agents; ++i)
    if (joint_action[i] < 0 || joint_action[i] >= env.action_dims[i])
      throw std::out_of_range("action index");
  return step_joint(env, state, joint_index(joint_action, env.action_dims), t, rng);
}

void MatrixGameSpec::validate() const {
  if (obs_dims.size() != 2 || action_dims.size() != 2)
    throw std::invalid_argument("matrix game is two-agent");
  for (int d : obs_dims)
    if (d < 1) throw std::invalid_argument("observation dims must be >= 1");
  for (int d : action_dims)
    if (d < 1) throw std::invalid_argument("action dims must be >= 1");
  const std::size_t cells = static_cast<std::size_t>(obs_dims[0]) * obs_dims[1] *
                            action_dims[0] * action_dims[1];
  if (payoff.size() != cells) throw std::invalid_argument("payoff dimension mismatch");
  if (static_cast<int>(obs_dist.size()) != obs_dims[0] * obs_dims[1])
    throw std::invalid_argument("obs_dist dimension mismatch");
  for (double v : payoff)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite payoff");
  check_prob_row(obs_dist.data(), obs_dims[0] * obs_dims[1], "obs_dist");
}

DecPomdpSpec MatrixGameSpec::to_dec_pomdp() const {
  validate();
  DecPomdpSpec env;
  env.id = id;
  env.n_agents = 2;
  env.n_states = obs_dims[0] * obs_dims[1];
  env.action_dims = action_dims;
  env.obs_dims = obs_dims;
  env.gamma = gamma;
  env.horizon = 1;
  env.initial_dist = obs_dist;
  env.observe.resize(env.n_states * 2);
  for (int o1 = 0; o1 < obs_dims[0]; ++o1)
    for (int o2 = 0; o2 < obs_dims[1]; ++o2) {
      int s = o1 * obs_dims[1] + o2;
      env.observe[s * 2 + 0] = o1;
      env.observe[s * 2 + 1] = o2;
    }
  const int ja = env.joint_action_count();
  env.reward.resize(static_cast<std::size_t>(env.n_states) * ja);
  env.transition.assign(static_cast<std::size_t>(env.n_states) * ja * env.n_states, 0.0);
  for (int s = 0; s < env.n_states; ++s)
    for (int a = 0; a < ja; ++a) {
      env.reward[s * ja + a] = payoff[static_cast<std::size_t>(s) * ja + a];
      // One-step game; the post-step state is irrelevant but rows must be valid.
      env.transition[(s * ja + a) * static_cast<std::size_t>(env.n_states) + s] = 1.0;
    }
  env.validate();
  return env;
}

MatrixGameSpec load_matrix_game(const std::string& text) {
  nlohmann::json doc = nlohmann::json::parse(text);
  MatrixGameSpec game;
  if (doc.contains("id")) game.id = doc.at("id").get<std::string>();
  if (doc.contains("n_agents") && doc.at("n_agents").get<int>() != 2)
    throw std::invalid_argument("matrix game is two-agent");
  game.obs_dims = doc.at("obs_dims").get<std::vector<int>>();
  game.action_dims = doc.at("action_dims").get<std::vector<int>>();
  if (doc.contains("gamma")) game.gamma = doc.at("gamma").get<double>();
  if (game.obs_dims.size() != 2 || game.action_dims.size() != 2)
    throw std::invalid_argument("matrix game is two-agent");

  // payoff arrives as nested arrays [o1][o2][a1][a2].
  const auto& p = doc.at("payoff");
  for (int o1 = 0; o1 < game.obs_dims[0]; ++o1)
    for (int o2 = 0; o2 < game.obs_dims[1]; ++o2)
      for (int a1 = 0; a1 < game.action_dims[0]; ++a1)
        for (int a2 = 0; a2 < game.action_dims[1]; ++a2) {
          try {
            game.payoff.push_back(p.at(o1).at(o2).at(a1).at(a2).get<double>());
          } catch (const nlohmann::json::exception&) {
            throw std::invalid_argument("payoff dimension mismatch");
          }
        }
  const auto& od = doc.at("obs_dist");
  for (int o1 = 0; o1 < game.obs_dims[0]; ++o1)
    for (int o2 = 0; o2 < game.obs_dims[1]; ++o2) {
      try {
        game.obs_dist.push_back(od.at(o1).at(o2).get<double>());
      } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument("obs_dist dimension mismatch");
      }
    }
  game.validate();
  return game;
}

std::string save_matrix_game(const MatrixGameSpec& game) {
  nlohmann::json doc;
  if (!game.id.empty()) doc["id"] = game.id;
  doc["n_agents"] = 2;
  doc["obs_dims"] = game.obs_dims;
  doc["action_dims"] = game.action_dims;
  doc["gamma"] = game.gamma;
  nlohmann::json payoff = nlohmann::json::array();
  for (int o1 = 0; o1 < game.obs_dims[0]; ++o1) {
    nlohmann::json l1 = nlohmann::json::array();
    for (int o2 = 0; o2 < game.obs_dims[1]; ++o2) {
      nlohmann::json l2 = nlohmann::json::array();
      for (int a1 = 0; a1 < game.action_dims[0]; ++a1) {
        nlohmann::json l3 = nlohmann::json::array();
        for (int a2 = 0; a2 < game.action_dims[1]; ++a2) l3.push_back(game.q(o1, o2, a1, a2));
        l2.push_back(std::move(l3));
      }
      l1.push_back(std::move(l2));
    }
    payoff.push_back(std::move(l1));
  }
  doc["payoff"] = std::move(payoff);
  nlohmann::json od = nlohmann::json::array();
  for (int o1 = 0; o1 < game.obs_dims[0]; ++o1) {
    nlohmann::json row = nlohmann::json::array();
    for (int o2 = 0; o2 < game.obs_dims[1]; ++o2) row.push_back(game.p(o1, o2));
    od.push_back(std::move(row));
  }
  doc["obs_dist"] = std::move(od);
  return doc.dump(2);
}

MatrixGameSpec fig1_matrix_game() {
  MatrixGameSpec game;
  game.id = "fig1-matrix";
  game.obs_dims = {2, 4};
  game.action_dims = {2, 1};
  // payoff[o1][o2][a1][0]
  const double q[2][4][2] = {
      {{53.2, 42.9}, {4.1, 1.2}, {64.3, 64.0}, {-5.1, 16.1}},
      {{31.8, 22.9}, {20.0, 28.0}, {34.1, 10.0}, {55.0, 81.5}},
  };
  for (int o1 = 0; o1 < 2; ++o1)
    for (int o2 = 0; o2 < 4; ++o2)
      for (int a1 = 0; a1 < 2; ++a1) game.payoff.push_back(q[o1][o2][a1]);
  game.obs_dist.assign(8, 1.0 / 8.0);
  game.validate();
  return game;
}

MatrixGameSpec gen_random_game(const std::vector<int>& sizes, double payoff_lo, double payoff_hi,
                               std::uint64_t seed) {
  if (sizes.size() != 4) throw std::invalid_argument("sizes = (|O1|,|O2|,|A1|,|A2|)");
  for (int d : sizes)
    if (d < 1) throw std::invalid_argument("sizes must be >= 1");
  if (!(std::isfinite(payoff_lo) && std::isfinite(payoff_hi)) || payoff_hi < payoff_lo)
    throw std::invalid_argument("bad payoff range");
  Rng rng(seed);
  MatrixGameSpec game;
  game.obs_dims = {sizes[0], sizes[1]};
  game.action_dims = {sizes[2], sizes[3]};
  const std::size_t cells =
      static_cast<std::size_t>(sizes[0]) * sizes[1] * sizes[2] * sizes[3];
  game.payoff.resize(cells);
  for (double& v : game.payoff) v = rng.uniform(payoff_lo, payoff_hi);
  game.obs_dist.assign(static_cast<std::size_t>(sizes[0]) * sizes[1],
                       1.0 / (sizes[0] * sizes[1]));
  char buf[64];
  std::snprintf(buf, sizeof buf, "rand-%llu", static_cast<unsigned long long>(seed));
  game.id = buf;
  game.validate();
  return game;
}

DecPomdpSpec MazeSpec::to_dec_pomdp() const {
  DecPomdpSpec env;
  env.id = "maze-4x4";
  env.n_agents = 2;
  env.n_states = kCells * kCells + 1;  // pair of cells + absorbing "done"
  const int done_state = kCells * kCells;
  env.action_dims = {5, 5};
  env.obs_dims = {kCells, kCells};
  env.gamma = gamma;
  env.horizon = horizon;
  env.terminal.assign(env.n_states, 0);
  env.terminal[done_state] = 1;

  env.observe.resize(env.n_states * 2);
  for (int c1 = 0; c1 < kCells; ++c1)
    for (int c2 = 0; c2 < kCells; ++c2) {
      int s = c1 * kCells + c2;
      env.observe[s * 2 + 0] = c1;
      env.observe[s * 2 + 1] = c2;
    }
  env.observe[done_state * 2 + 0] = 0;
  env.observe[done_state * 2 + 1] = 0;

  env.initial_dist.assign(env.n_states, 0.0);
  for (int s = 0; s < kCells * kCells; ++s) env.initial_dist[s] = 1.0 / (kCells * kCells);

  auto move = [](int cell, int action) {
    int r = cell / kSide, c = cell % kSide;
    switch (action) {
      case 0: r = std::max(0, r - 1); break;          // up
      case 1: r = std::min(kSide - 1, r + 1); break;  // down
      case 2: c = std::max(0, c - 1); break;          // left
      case 3: c = std::min(kSide - 1, c + 1); break;  // right
      default: break;                                 // stay
    }
    return r * kSide + c;
  };
  constexpr int kLandmarkHigh = 0 * kSide + 0;  // (0,0) zero-indexed
  constexpr int kLandmarkLow = 2 * kSide + 2;   // (2,2) zero-indexed

  const int ja = env.joint_action_count();
  env.reward.assign(static_cast<std::size_t>(env.n_states) * ja, 0.0);
  env.transition.assign(static_cast<std::size_t>(env.n_states) * ja * env.n_states, 0.0);
  for (int a = 0; a < ja; ++a)
    env.transition[(done_state * ja + a) * static_cast<std::size_t>(env.n_states) + done_state] = 1.0;
  for (int c1 = 0; c1 < kCells; ++c1)
    for (int c2 = 0; c2 < kCells; ++c2) {
      int s = c1 * kCells + c2;
      for (int a1 = 0; a1 < 5; ++a1)
        for (int a2 = 0; a2 < 5; ++a2) {
          int a = a1 * 5 + a2;
          int n1 = move(c1, a1), n2 = move(c2, a2);
          int next = n1 * kCells + n2;
          double r = 0.0;
          if (n1 == kLandmarkHigh && n2 == kLandmarkHigh) {
            r = r_high;
            next = done_state;
          } else if (n1 == kLandmarkLow && n2 == kLandmarkLow) {
            r = r_low;
            next = done_state;
          }
          env.reward[s * ja + a] = r;
          env.transition[(s * ja + a) * static_cast<std::size_t>(env.n_states) + next] = 1.0;
        }
    }
  env.validate();
  return env;
}

DecPomdpSpec builtin_env(const std::string& id) {
  if (id == "fig1-matrix") return fig1_matrix_game().to_dec_pomdp();
  if (id == "maze-4x4") return MazeSpec{}.to_dec_pomdp();
  throw std::invalid_argument("unknown builtin environment: " + id);
}

}  // namespace commgap
