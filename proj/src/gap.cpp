#include "commgap/gap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace commgap {

namespace {
double vec_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}
}  // namespace

double VisitationDist::marginal(int agent, int obs, const std::vector<int>& obs_dims) const {
  double sum = 0.0;
  for (std::size_t jo = 0; jo < d.size(); ++jo)
    if (split_index(static_cast<int>(jo), obs_dims)[agent] == obs) sum += d[jo];
  return sum;
}

VisitationDist visitation(const DecPomdpSpec& env, const JointPolicy& policy, double tol) {
  const int ja = env.joint_action_count();
  std::vector<double> p = env.initial_dist;  // over states, "alive" mass only
  std::vector<double> acc(env.n_states, 0.0);
  const double gamma = env.gamma;

  int max_t;
  if (env.horizon > 0) {
    max_t = env.horizon;
  } else {
    if (gamma >= 1.0) throw std::invalid_argument("visitation needs gamma < 1 or finite horizon");
    max_t = static_cast<int>(std::ceil(std::log(std::max(tol, 1e-300)) / std::log(gamma))) + 1;
  }

  double w = 1.0;
  for (int t = 0; t < max_t; ++t) {
    for (int s = 0; s < env.n_states; ++s)
      if (!env.is_terminal(s)) acc[s] += w * p[s];
    if (t + 1 >= max_t) break;
    std::vector<double> next(env.n_states, 0.0);
    for (int s = 0; s < env.n_states; ++s) {
      if (p[s] == 0.0 || env.is_terminal(s)) continue;
      int a = policy[env.obs_of(s)];
      const double* row = &env.transition[(s * ja + a) * static_cast<std::size_t>(env.n_states)];
      for (int s2 = 0; s2 < env.n_states; ++s2)
        if (row[s2] != 0.0) next[s2] += p[s] * row[s2];
    }
    p.swap(next);
    w *= gamma;
  }

  VisitationDist out;
  out.gamma = gamma;
  out.d.assign(env.joint_obs_count(), 0.0);
  double total = 0.0;
  for (int s = 0; s < env.n_states; ++s) total += acc[s];
  if (total <= 0.0) throw std::runtime_error("visitation: no pre-terminal mass");
  for (int s = 0; s < env.n_states; ++s)
    if (acc[s] != 0.0) out.d[env.obs_of(s)] += acc[s] / total;
  return out;
}

double expected_return(const DecPomdpSpec& env, const JointPolicy& policy, double gamma,
                       double tol) {
  if (gamma < 0.0) gamma = env.gamma;
  const int ja = env.joint_action_count();
  if (env.horizon > 0) {
    std::vector<double> p = env.initial_dist;
    double j = 0.0, w = 1.0;
    for (int t = 0; t < env.horizon; ++t) {
      std::vector<double> next(env.n_states, 0.0);
      for (int s = 0; s < env.n_states; ++s) {
        if (p[s] == 0.0 || env.is_terminal(s)) continue;
        int a = policy.at(env.obs_of(s));
        j += w * p[s] * env.reward[s * ja + a];
        const double* row = &env.transition[(s * ja + a) * static_cast<std::size_t>(env.n_states)];
        for (int s2 = 0; s2 < env.n_states; ++s2)
          if (row[s2] != 0.0) next[s2] += p[s] * row[s2];
      }
      p.swap(next);
      w *= gamma;
    }
    return j;
  }
  if (gamma >= 1.0)
    throw std::invalid_argument("expected_return needs gamma < 1 or finite horizon");
  // iterative policy evaluation
  std::vector<double> v(env.n_states, 0.0);
  for (int it = 0; it < 10000000; ++it) {
    double residual = 0.0;
    for (int s = 0; s < env.n_states; ++s) {
      if (env.is_terminal(s)) continue;
      int a = policy.at(env.obs_of(s));
      double acc = env.reward[s * ja + a];
      const double* row = &env.transition[(s * ja + a) * static_cast<std::size_t>(env.n_states)];
      for (int s2 = 0; s2 < env.n_states; ++s2)
        if (row[s2] != 0.0 && !env.is_terminal(s2)) acc += gamma * row[s2] * v[s2];
      residual = std::max(residual, std::abs(acc - v[s]));
      v[s] = acc;
    }
    if (residual <= tol) break;
  }
  double j = 0.0;
  for (int s = 0; s < env.n_states; ++s) j += env.initial_dist[s] * v[s];
  return (1.0 - gamma) * j;
}

double mc_return(const DecPomdpSpec& env, const JointPolicy& policy, int episodes,
                 std::uint64_t seed) {
  Rng rng(seed);
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    auto [state, obs] = reset(env, rng);
    double g = 0.0, w = 1.0;
    bool done = false;
    int t = 0;
    while (!done) {
      StepResult sr = step_joint(env, state, policy.at(env.obs_of(state)), t, rng);
      g += w * sr.transition.reward;
      w *= env.gamma;
      state = sr.next_state;
      done = sr.transition.done;
      ++t;
      if (env.horizon == 0 && w < 1e-14) break;
    }
    total += env.horizon == 0 ? (1.0 - env.gamma) * g : g;
  }
  return total / episodes;
}

ClusterGeometry cluster_geometry(const QVectorSet& vectors, const MessageFunction& fn) {
  if (static_cast<int>(fn.assign.size()) != vectors.size())
    throw std::invalid_argument("message function / vector count mismatch");
  const int n = vectors.size();
  std::vector<int> labels = fn.hard_labels();

  double total_w = 0.0;
  for (int o = 0; o < n; ++o) total_w += vectors.weights[o];
  if (total_w <= 0.0) throw std::invalid_argument("vector set has no visitation mass");

  ClusterGeometry g;
  g.centers.assign(fn.alphabet_size, std::vector<double>(vectors.dim(), 0.0));
  std::vector<double> cluster_w(fn.alphabet_size, 0.0);
  for (int o = 0; o < n; ++o) {
    double w = vectors.weights[o] / total_w;
    if (w <= 0.0) continue;
    cluster_w[labels[o]] += w;
    for (int i = 0; i < vectors.dim(); ++i) g.centers[labels[o]][i] += w * vectors.vectors[o][i];
  }
  for (int m = 0; m < fn.alphabet_size; ++m)
    if (cluster_w[m] > 0.0)
      for (double& x : g.centers[m]) x /= cluster_w[m];

  g.per_obs_eps.assign(n, -1.0);
  g.eps = 0.0;
  g.q_max = 0.0;
  for (int o = 0; o < n; ++o) {
    double w = vectors.weights[o] / total_w;
    if (w <= 0.0) continue;  // unvisited observations are excluded
    g.q_max = std::max(g.q_max, vec_norm(vectors.vectors[o]));
    const auto& center = g.centers[labels[o]];
    double e;
    if (vec_norm(center) == 0.0 || vec_norm(vectors.vectors[o]) == 0.0)
      e = 1.0;  // degenerate direction: charge the maximum orthogonal distance
    else
      e = cosine_distance(vectors.vectors[o], center);
    g.per_obs_eps[o] = e;
    g.eps += w * e;
  }
  return g;
}

double full_observability_return(const MatrixGameSpec& game) {
  double j = 0.0;
  for (int o1 = 0; o1 < game.obs_dims[0]; ++o1)
    for (int o2 = 0; o2 < game.obs_dims[1]; ++o2) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a1 = 0; a1 < game.action_dims[0]; ++a1)
        for (int a2 = 0; a2 < game.action_dims[1]; ++a2)
          best = std::max(best, game.q(o1, o2, a1, a2));
      j += game.p(o1, o2) * best;
    }
  return j;
}

double center_policy_value(const MatrixGameSpec& /*game*/, const MessageFunction& fn,
                           const QVectorSet& raw_vectors) {
  const int n = raw_vectors.size();
  std::vector<int> labels = fn.hard_labels();
  double total_w = std::accumulate(raw_vectors.weights.begin(), raw_vectors.weights.end(), 0.0);
  if (total_w <= 0.0) throw std::invalid_argument("vector set has no visitation mass");

  std::vector<std::vector<double>> centers(fn.alphabet_size,
                                           std::vector<double>(raw_vectors.dim(), 0.0));
  std::vector<double> cluster_w(fn.alphabet_size, 0.0);
  for (int o = 0; o < n; ++o) {
    double w = raw_vectors.weights[o] / total_w;
    cluster_w[labels[o]] += w;
    for (int i = 0; i < raw_vectors.dim(); ++i) centers[labels[o]][i] += w * raw_vectors.vectors[o][i];
  }
  double value = 0.0;
  for (int m = 0; m < fn.alphabet_size; ++m) {
    if (cluster_w[m] <= 0.0) continue;
    for (double& x : centers[m]) x /= cluster_w[m];
    double phi = 0.0;
    for (int b = 0; b < raw_vectors.n_blocks; ++b) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < raw_vectors.block_size; ++a)
        best = std::max(best, centers[m][b * raw_vectors.block_size + a]);
      phi += best;
    }
    value += cluster_w[m] * phi;
  }
  return value;
}

CommPolicy brute_force_comm_policy(const MatrixGameSpec& game, const MessageFunction& fn) {
  const int o1n = game.obs_dims[0], o2n = game.obs_dims[1];
  const int a1n = game.action_dims[0], a2n = game.action_dims[1];
  std::vector<int> labels = fn.hard_labels();
  const int mn = fn.alphabet_size;

  // For a fixed agent-2 action map, the best agent-1 response decomposes over
  // keys (o1, m): each key controls a disjoint slice of the expectation.
  auto best_response = [&](const std::vector<int>& a2_of) {
    CommPolicy pi;
    pi.a2 = a2_of;
    pi.a1.assign(static_cast<std::size_t>(o1n) * mn, 0);
    pi.value = 0.0;
    for (int o1 = 0; o1 < o1n; ++o1)
      for (int m = 0; m < mn; ++m) {
        double best = -std::numeric_limits<double>::infinity();
        int best_a = 0;
        for (int a1 = 0; a1 < a1n; ++a1) {
          double v = 0.0;
          bool any = false;
          for (int o2 = 0; o2 < o2n; ++o2) {
            if (labels[o2] != m) continue;
            any = true;
            v += game.p(o1, o2) * game.q(o1, o2, a1, a2_of[o2]);
          }
          if (!any) { best = 0.0; best_a = 0; break; }
          if (v > best) {
            best = v;
            best_a = a1;
          }
        }
        pi.a1[o1 * mn + m] = best_a;
        pi.value += best;
      }
    return pi;
  };

  if (a2n == 1) return best_response(std::vector<int>(o2n, 0));

  double combos = std::pow(static_cast<double>(a2n), o2n);
  if (combos > 1e6) throw std::invalid_argument("brute force beyond enumeration cap");
  CommPolicy best;
  best.value = -std::numeric_limits<double>::infinity();
  std::vector<int> a2_of(o2n, 0);
  for (long idx = 0; idx < static_cast<long>(combos); ++idx) {
    long rest = idx;
    for (int o2 = 0; o2 < o2n; ++o2) {
      a2_of[o2] = static_cast<int>(rest % a2n);
      rest /= a2n;
    }
    CommPolicy cand = best_response(a2_of);
    if (cand.value > best.value) best = cand;
  }
  return best;
}

std::string GapReport::csv_header() {
  return "# schema: env_id,n_labels,j_full,j_comm,j_nocomm,gap,eps,q_max,bound,holds";
}

std::string GapReport::csv_row() const {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d",
                env_id.c_str(), n_labels, j_full, j_comm, j_nocomm, gap,
                eps_per_agent.empty() ? 0.0 : eps_per_agent[0],
                q_max_per_agent.empty() ? 0.0 : q_max_per_agent[0], bound, holds ? 1 : 0);
  return buf;
}

std::string GapReport::summary() const {
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "env=%s labels=%d\n"
                "  J(full)    = %.10f\n"
                "  J(comm)    = %.10f\n"
                "  J(no-comm) = %.10f\n"
                "  gap        = %.10f\n"
                "  eps        = %.10f\n"
                "  Q_max(L2)  = %.10f   max|Q| = %.10f\n"
                "  bound      = %.10f   holds = %s\n",
                env_id.c_str(), n_labels, j_full, j_comm, j_nocomm, gap,
                eps_per_agent.empty() ? 0.0 : eps_per_agent[0],
                q_max_per_agent.empty() ? 0.0 : q_max_per_agent[0], q_max_abs, bound,
                holds ? "yes" : "no");
  return buf;
}

GapReport gap_report(const MatrixGameSpec& game, int alphabet_size, const RimConfig& config,
                     Activation activation) {
  game.validate();
  DecPomdpSpec env = game.to_dec_pomdp();
  ActionValueTable q = value_iteration(env);

  // One-step game: visitation over joint observations is the observation
  // distribution itself, independent of the policy.
  QVectorSet raw = build_qvectors(q, game.obs_dist, 1, game.obs_dims, game.action_dims);
  RimConfig cfg = config;
  cfg.k_neighbors = std::min(cfg.k_neighbors, raw.size() - 1);
  QVectorSet clustered = normalize_activation(raw, activation);
  MessageFunction fn = fit_messages(clustered, raw.weights, alphabet_size, cfg);

  GapReport report;
  report.env_id = game.id.empty() ? "matrix" : game.id;
  report.n_labels = alphabet_size;
  report.labels = fn.hard_labels();
  report.j_full = full_observability_return(game);
  report.j_comm = brute_force_comm_policy(game, fn).value;
  report.j_nocomm =
      brute_force_comm_policy(game, MessageFunction::constant(1, game.obs_dims[1])).value;
  report.gap = report.j_full - report.j_comm;

  ClusterGeometry geo = cluster_geometry(raw, fn);
  report.eps_per_agent = {geo.eps};
  report.q_max_per_agent = {geo.q_max};
  report.bound = geo.q_max * std::sqrt(2.0 * geo.eps);
  report.q_max_abs = 0.0;
  for (double v : game.payoff) report.q_max_abs = std::max(report.q_max_abs, std::abs(v));
  report.holds = report.gap <= report.bound + 1e-9;
  return report;
}

std::vector<MonotonicityRow> label_monotonicity_check(const MatrixGameSpec& game, int max_labels) {
  game.validate();
  DecPomdpSpec env = game.to_dec_pomdp();
  ActionValueTable q = value_iteration(env);
  QVectorSet raw = build_qvectors(q, game.obs_dist, 1, game.obs_dims, game.action_dims);
  const int n = raw.size();

  std::vector<MonotonicityRow> rows;
  for (int mlab = 1; mlab <= max_labels; ++mlab) {
    double combos = std::pow(static_cast<double>(mlab), n);
    if (combos > 1e6) throw std::invalid_argument("monotonicity check beyond enumeration cap");
    double best_eps = std::numeric_limits<double>::infinity();
    MessageFunction best_fn;
    std::vector<int> labels(n, 0);
    for (long idx = 0; idx < static_cast<long>(combos); ++idx) {
      long rest = idx;
      for (int i = n - 1; i >= 0; --i) {
        labels[i] = static_cast<int>(rest % mlab);
        rest /= mlab;
      }
      auto fn = MessageFunction::from_labels(1, mlab, labels);
      double eps = cluster_geometry(raw, fn).eps;
      if (eps < best_eps - 1e-15) {
        best_eps = eps;
        best_fn = fn;
      }
    }
    double j_comm = brute_force_comm_policy(game, best_fn).value;
    rows.push_back({mlab, best_eps, full_observability_return(game) - j_comm});
  }
  return rows;
}

}  // namespace commgap
