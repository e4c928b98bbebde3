#include "commgap/comm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace commgap {

int MessageFunction::hard_label(int o) const {
  const auto& row = assign[o];
  int best = 0;
  for (int m = 1; m < alphabet_size; ++m)
    if (row[m] > row[best]) best = m;
  return best;
}

std::vector<int> MessageFunction::hard_labels() const {
  std::vector<int> labels(assign.size());
  for (std::size_t o = 0; o < assign.size(); ++o) labels[o] = hard_label(static_cast<int>(o));
  return labels;
}

MessageFunction MessageFunction::from_labels(int agent, int alphabet_size,
                                             const std::vector<int>& labels) {
  MessageFunction fn;
  fn.agent = agent;
  fn.alphabet_size = alphabet_size;
  fn.assign.assign(labels.size(), std::vector<double>(alphabet_size, 0.0));
  for (std::size_t o = 0; o < labels.size(); ++o) {
    if (labels[o] < 0 || labels[o] >= alphabet_size)
      throw std::invalid_argument("label out of alphabet");
    fn.assign[o][labels[o]] = 1.0;
  }
  return fn;
}

MessageFunction MessageFunction::constant(int agent, int n_obs) {
  return from_labels(agent, 1, std::vector<int>(n_obs, 0));
}

MessageFunction MessageFunction::identity(int agent, int n_obs) {
  std::vector<int> labels(n_obs);
  std::iota(labels.begin(), labels.end(), 0);
  return from_labels(agent, n_obs, labels);
}

namespace {
double dot(const std::vector<double>& u, const std::vector<double>& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}
double norm2(const std::vector<double>& u) { return std::sqrt(dot(u, u)); }
}  // namespace

double cosine_distance(const std::vector<double>& u, const std::vector<double>& v) {
  if (u.size() != v.size()) throw std::invalid_argument("dimension mismatch");
  double nu = norm2(u), nv = norm2(v);
  if (nu == 0.0 || nv == 0.0) throw std::invalid_argument("cosine distance of zero vector");
  double c = dot(u, v) / (nu * nv);
  c = std::clamp(c, -1.0, 1.0);
  return 1.0 - c;
}

QVectorSet build_qvectors(const ActionValueTable& q_table, const std::vector<double>& visitation,
                          int agent, const std::vector<int>& obs_dims,
                          const std::vector<int>& action_dims) {
  const int n_agents = static_cast<int>(obs_dims.size());
  if (static_cast<int>(visitation.size()) != dims_product(obs_dims))
    throw std::invalid_argument("visitation dimension mismatch");
  const int ja = dims_product(action_dims);
  if (q_table.n_actions() != ja || q_table.n_keys() != dims_product(obs_dims))
    throw std::invalid_argument("q_table dimension mismatch");

  std::vector<int> other_dims;
  for (int i = 0; i < n_agents; ++i)
    if (i != agent) other_dims.push_back(obs_dims[i]);
  const int n_other = dims_product(other_dims);

  QVectorSet set;
  set.agent = agent;
  set.n_blocks = n_other;
  set.block_size = ja;

  const int n_obs = obs_dims[agent];
  set.vectors.assign(n_obs, std::vector<double>(set.dim(), 0.0));
  set.weights.assign(n_obs, 0.0);
  set.zero_visit.assign(n_obs, 0);

  for (int o = 0; o < n_obs; ++o) {
    // joint observation index for each other-observation combination
    std::vector<double> joint_p(n_other);
    std::vector<int> joint_o(n_other);
    for (int b = 0; b < n_other; ++b) {
      std::vector<int> others = split_index(b, other_dims);
      std::vector<int> full(n_agents);
      int k = 0;
      for (int i = 0; i < n_agents; ++i) full[i] = (i == agent) ? o : others[k++];
      joint_o[b] = joint_index(full, obs_dims);
      joint_p[b] = visitation[joint_o[b]];
    }
    double marginal = std::accumulate(joint_p.begin(), joint_p.end(), 0.0);
    set.weights[o] = marginal;
    if (marginal <= 0.0) set.zero_visit[o] = 1;
    for (int b = 0; b < n_other; ++b) {
      double w = set.zero_visit[o] ? 1.0 / n_other : joint_p[b] / marginal;
      for (int a = 0; a < ja; ++a) set.vectors[o][b * ja + a] = q_table.at(joint_o[b], a) * w;
    }
  }
  return set;
}

QVectorSet normalize_activation(const QVectorSet& vectors, Activation activation, double alpha,
                                double beta, bool auto_scale) {
  QVectorSet out = vectors;
  if (activation == Activation::kNone) return out;
  if (activation == Activation::kSoftmax) {
    for (auto& v : out.vectors) {
      double mx = *std::max_element(v.begin(), v.end());
      double z = 0.0;
      for (double& x : v) {
        x = std::exp(x - mx);
        z += x;
      }
      for (double& x : v) x /= z;
    }
    return out;
  }
  // tanh((v - alpha) / beta)
  if (auto_scale) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : out.vectors)
      for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    alpha = (hi + lo) / 2.0;
    beta = hi;
  }
  if (beta == 0.0) {
    std::cerr << "normalize_activation: zero scale, applying identity\n";
    return out;
  }
  for (auto& v : out.vectors)
    for (double& x : v) x = std::tanh((x - alpha) / beta);
  return out;
}

double mutual_information(const MessageFunction& fn, const std::vector<double>& obs_weights) {
  if (obs_weights.size() != fn.assign.size())
    throw std::invalid_argument("obs_weights dimension mismatch");
  double total = std::accumulate(obs_weights.begin(), obs_weights.end(), 0.0);
  if (total <= 0.0) throw std::invalid_argument("obs_weights must have positive mass");

  auto plogp = [](double p) { return p > 0.0 ? p * std::log(p) : 0.0; };
  std::vector<double> pm(fn.alphabet_size, 0.0);
  double h_m_given_o = 0.0;
  for (std::size_t o = 0; o < obs_weights.size(); ++o) {
    double w = obs_weights[o] / total;
    if (w <= 0.0) continue;
    for (int m = 0; m < fn.alphabet_size; ++m) {
      pm[m] += w * fn.assign[o][m];
      h_m_given_o -= w * plogp(fn.assign[o][m]);
    }
  }
  double h_m = 0.0;
  for (double p : pm) h_m -= plogp(p);
  return std::max(0.0, h_m - h_m_given_o);
}

namespace {

// k-nearest-neighbor pairs under cosine distance, zero-norm vectors excluded.
struct NeighborGraph {
  struct Edge {
    int p, q;
    double weight;  // per WeightMode
  };
  std::vector<Edge> edges;
  std::vector<char> zero_norm;
};

NeighborGraph build_graph(const QVectorSet& vectors, const RimConfig& config) {
  const int n = vectors.size();
  NeighborGraph g;
  g.zero_norm.assign(n, 0);
  std::vector<int> live;
  for (int i = 0; i < n; ++i) {
    if (norm2(vectors.vectors[i]) == 0.0)
      g.zero_norm[i] = 1;
    else
      live.push_back(i);
  }
  int k = std::min<int>(config.k_neighbors, static_cast<int>(live.size()) - 1);
  if (k < 0) k = 0;
  if (config.k_neighbors >= vectors.size())
    throw std::invalid_argument("k_neighbors must be < number of vectors");
  for (int p : live) {
    std::vector<std::pair<double, int>> dists;
    for (int q : live) {
      if (q == p) continue;
      dists.emplace_back(cosine_distance(vectors.vectors[p], vectors.vectors[q]), q);
    }
    std::stable_sort(dists.begin(), dists.end());
    for (int i = 0; i < k; ++i) {
      double d = dists[i].first;
      double w = config.weight_mode == WeightMode::kDistanceAsWritten ? d : 1.0 - d / 2.0;
      g.edges.push_back({p, dists[i].second, w});
    }
  }
  return g;
}

double graph_loss(const NeighborGraph& g, const MessageFunction& fn,
                  const std::vector<double>& obs_weights, const RimConfig& config) {
  double l_cd = 0.0;
  for (const auto& e : g.edges) {
    double sq = 0.0;
    for (int m = 0; m < fn.alphabet_size; ++m) {
      double d = fn.assign[e.p][m] - fn.assign[e.q][m];
      sq += d * d;
    }
    l_cd += e.weight * sq;
  }
  return l_cd - config.lambda * mutual_information(fn, obs_weights);
}

// Forces zero-norm vectors onto the last label (they carry no direction).
void pin_zero_norm(std::vector<int>& labels, const NeighborGraph& g, int alphabet_size) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (g.zero_norm[i]) labels[i] = alphabet_size - 1;
}

MessageFunction fit_exhaustive(const QVectorSet& vectors, const std::vector<double>& obs_weights,
                               int alphabet_size, const RimConfig& config,
                               const NeighborGraph& g) {
  const int n = vectors.size();
  double combos = std::pow(static_cast<double>(alphabet_size), n);
  if (combos > 1e6) throw std::invalid_argument("exhaustive search beyond enumeration cap");

  std::vector<int> labels(n, 0), best_labels(n, 0);
  pin_zero_norm(best_labels, g, alphabet_size);
  double best = std::numeric_limits<double>::infinity();
  const long total = static_cast<long>(combos);
  for (long idx = 0; idx < total; ++idx) {
    long rest = idx;
    for (int i = n - 1; i >= 0; --i) {
      labels[i] = static_cast<int>(rest % alphabet_size);
      rest /= alphabet_size;
    }
    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      if (g.zero_norm[i] && labels[i] != alphabet_size - 1) ok = false;
    if (!ok) continue;
    auto fn = MessageFunction::from_labels(vectors.agent, alphabet_size, labels);
    double loss = graph_loss(g, fn, obs_weights, config);
    if (loss < best - 1e-15) {
      best = loss;
      best_labels = labels;
    }
  }
  return MessageFunction::from_labels(vectors.agent, alphabet_size, best_labels);
}

MessageFunction fit_coordinate_descent(const QVectorSet& vectors,
                                       const std::vector<double>& obs_weights, int alphabet_size,
                                       const RimConfig& config, const NeighborGraph& g) {
  const int n = vectors.size();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> best_labels(n, 0);
  pin_zero_norm(best_labels, g, alphabet_size);
  Rng rng(config.seed);
  for (int r = 0; r < std::max(1, config.restarts); ++r) {
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) labels[i] = rng.below(alphabet_size);
    pin_zero_norm(labels, g, alphabet_size);
    auto loss_of = [&](const std::vector<int>& l) {
      return graph_loss(g, MessageFunction::from_labels(vectors.agent, alphabet_size, l),
                        obs_weights, config);
    };
    double cur = loss_of(labels);
    bool improved = true;
    while (improved) {
      improved = false;
      for (int i = 0; i < n; ++i) {
        if (g.zero_norm[i]) continue;
        int keep = labels[i];
        for (int m = 0; m < alphabet_size; ++m) {
          if (m == keep) continue;
          labels[i] = m;
          double trial = loss_of(labels);
          if (trial < cur - 1e-15) {
            cur = trial;
            keep = m;
            improved = true;
          }
        }
        labels[i] = keep;
      }
    }
    if (cur < best - 1e-15) {
      best = cur;
      best_labels = labels;
    }
  }
  return MessageFunction::from_labels(vectors.agent, alphabet_size, best_labels);
}

MessageFunction fit_soft_gradient(const QVectorSet& vectors, const std::vector<double>& obs_weights,
                                  int alphabet_size, const RimConfig& config,
                                  const NeighborGraph& g) {
  const int n = vectors.size();
  Rng rng(config.seed);
  auto softmax_rows = [&](const std::vector<double>& logits) {
    MessageFunction fn;
    fn.agent = vectors.agent;
    fn.alphabet_size = alphabet_size;
    fn.assign.assign(n, std::vector<double>(alphabet_size, 0.0));
    for (int o = 0; o < n; ++o) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int m = 0; m < alphabet_size; ++m)
        mx = std::max(mx, logits[o * alphabet_size + m]);
      double z = 0.0;
      for (int m = 0; m < alphabet_size; ++m) {
        fn.assign[o][m] = std::exp(logits[o * alphabet_size + m] - mx);
        z += fn.assign[o][m];
      }
      for (int m = 0; m < alphabet_size; ++m) fn.assign[o][m] /= z;
    }
    return fn;
  };
  auto loss_of = [&](const std::vector<double>& logits) {
    return graph_loss(g, softmax_rows(logits), obs_weights, config);
  };

  double best = std::numeric_limits<double>::infinity();
  std::vector<double> best_logits(static_cast<std::size_t>(n) * alphabet_size, 0.0);
  for (int r = 0; r < std::max(1, config.restarts); ++r) {
    std::vector<double> logits(static_cast<std::size_t>(n) * alphabet_size);
    for (double& z : logits) z = rng.uniform(-1.0, 1.0);
    double step = 0.5;
    double cur = loss_of(logits);
    std::vector<double> grad(logits.size());
    for (int it = 0; it < 300; ++it) {
      const double h = 1e-5;
      for (std::size_t i = 0; i < logits.size(); ++i) {
        double keep = logits[i];
        logits[i] = keep + h;
        double up = loss_of(logits);
        logits[i] = keep - h;
        double dn = loss_of(logits);
        logits[i] = keep;
        grad[i] = (up - dn) / (2 * h);
      }
      std::vector<double> trial(logits.size());
      for (std::size_t i = 0; i < logits.size(); ++i) trial[i] = logits[i] - step * grad[i];
      double tl = loss_of(trial);
      if (tl < cur) {
        logits.swap(trial);
        cur = tl;
        step *= 1.1;
      } else {
        step *= 0.5;
        if (step < 1e-8) break;
      }
    }
    // snap to the hard assignment it converged toward
    auto fn = softmax_rows(logits);
    auto labels = fn.hard_labels();
    pin_zero_norm(labels, g, alphabet_size);
    double hard = graph_loss(g, MessageFunction::from_labels(vectors.agent, alphabet_size, labels),
                             obs_weights, config);
    if (hard < best - 1e-15) {
      best = hard;
      for (int o = 0; o < n; ++o)
        for (int m = 0; m < alphabet_size; ++m)
          best_logits[o * alphabet_size + m] = (labels[o] == m) ? 1.0 : 0.0;
    }
  }
  MessageFunction out;
  out.agent = vectors.agent;
  out.alphabet_size = alphabet_size;
  out.assign.assign(n, std::vector<double>(alphabet_size, 0.0));
  for (int o = 0; o < n; ++o)
    for (int m = 0; m < alphabet_size; ++m)
      out.assign[o][m] = best_logits[o * alphabet_size + m];
  return out;
}

}  // namespace

double rim_loss(const MessageFunction& fn, const QVectorSet& vectors,
                const std::vector<double>& obs_weights, const RimConfig& config) {
  if (static_cast<int>(fn.assign.size()) != vectors.size())
    throw std::invalid_argument("message function / vector count mismatch");
  NeighborGraph g = build_graph(vectors, config);
  return graph_loss(g, fn, obs_weights, config);
}

MessageFunction fit_messages(const QVectorSet& vectors, const std::vector<double>& obs_weights,
                             int alphabet_size, const RimConfig& config) {
  if (alphabet_size < 1) throw std::invalid_argument("alphabet_size must be >= 1");
  if (alphabet_size == 1) return MessageFunction::constant(vectors.agent, vectors.size());
  NeighborGraph g = build_graph(vectors, config);
  switch (config.solver) {
    case RimSolver::kExhaustive:
      return fit_exhaustive(vectors, obs_weights, alphabet_size, config, g);
    case RimSolver::kCoordinateDescent:
      return fit_coordinate_descent(vectors, obs_weights, alphabet_size, config, g);
    case RimSolver::kSoftGradient:
      return fit_soft_gradient(vectors, obs_weights, alphabet_size, config, g);
  }
  throw std::logic_error("unreachable");
}

std::vector<ObsActionPair> top_k2_frequent(const ReplayBuffer& buffer, int agent, int k2,
                                           const std::vector<int>& obs_dims,
                                           const std::vector<int>& action_dims) {
  if (buffer.size() == 0) throw std::invalid_argument("replay buffer empty");
  std::vector<int> other_obs_dims, other_action_dims;
  for (std::size_t i = 0; i < obs_dims.size(); ++i)
    if (static_cast<int>(i) != agent) {
      other_obs_dims.push_back(obs_dims[i]);
      other_action_dims.push_back(action_dims[i]);
    }

  struct Entry {
    int count = 0;
    std::size_t first_seen = 0;
  };
  std::map<std::pair<int, int>, Entry> counts;
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const Transition& t = buffer[i];
    std::vector<int> oo, oa;
    for (std::size_t j = 0; j < obs_dims.size(); ++j)
      if (static_cast<int>(j) != agent) {
        oo.push_back(t.joint_obs[j]);
        oa.push_back(t.joint_action[j]);
      }
    auto key = std::make_pair(joint_index(oo, other_obs_dims), joint_index(oa, other_action_dims));
    auto [it, fresh] = counts.try_emplace(key);
    if (fresh) it->second.first_seen = i;
    ++it->second.count;
  }
  std::vector<std::pair<std::pair<int, int>, Entry>> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first_seen < b.second.first_seen;
  });
  std::vector<ObsActionPair> out;
  for (const auto& [key, e] : sorted) {
    if (static_cast<int>(out.size()) >= k2) break;
    out.push_back({key.first, key.second, e.count});
  }
  return out;
}

QVectorSet build_qvectors_sampled(const ActionValueTable& q_table, const ReplayBuffer& buffer,
                                  int agent, const std::vector<int>& obs_dims,
                                  const std::vector<int>& action_dims, const RimConfig& config,
                                  Rng& rng) {
  const int n_agents = static_cast<int>(obs_dims.size());
  std::vector<Transition> batch = replay_sample(buffer, config.k1, rng);
  ReplayBuffer sample(batch.size());
  for (const auto& t : batch) sample.push(t);
  std::vector<ObsActionPair> pairs =
      top_k2_frequent(sample, agent, config.k2, obs_dims, action_dims);

  std::vector<int> other_obs_dims, other_action_dims;
  for (int i = 0; i < n_agents; ++i)
    if (i != agent) {
      other_obs_dims.push_back(obs_dims[i]);
      other_action_dims.push_back(action_dims[i]);
    }

  const int n_obs = obs_dims[agent];
  // empirical joint counts over (o_agent, other-obs) in the batch
  std::vector<double> joint_count(static_cast<std::size_t>(n_obs) * dims_product(other_obs_dims),
                                  0.0);
  std::vector<double> obs_count(n_obs, 0.0);
  for (const auto& t : batch) {
    std::vector<int> oo;
    for (int j = 0; j < n_agents; ++j)
      if (j != agent) oo.push_back(t.joint_obs[j]);
    int b = joint_index(oo, other_obs_dims);
    joint_count[static_cast<std::size_t>(t.joint_obs[agent]) * dims_product(other_obs_dims) + b] +=
        1.0;
    obs_count[t.joint_obs[agent]] += 1.0;
  }

  QVectorSet set;
  set.agent = agent;
  set.n_blocks = static_cast<int>(pairs.size());
  set.block_size = action_dims[agent];
  set.vectors.assign(n_obs, std::vector<double>(set.dim(), 0.0));
  set.weights.assign(n_obs, 0.0);
  set.zero_visit.assign(n_obs, 0);
  double total = std::accumulate(obs_count.begin(), obs_count.end(), 0.0);

  for (int o = 0; o < n_obs; ++o) {
    set.weights[o] = total > 0.0 ? obs_count[o] / total : 0.0;
    double mass = 0.0;
    for (const auto& p : pairs)
      mass += joint_count[static_cast<std::size_t>(o) * dims_product(other_obs_dims) + p.other_obs];
    if (mass <= 0.0) set.zero_visit[o] = 1;
    for (std::size_t bi = 0; bi < pairs.size(); ++bi) {
      const auto& p = pairs[bi];
      double w = set.zero_visit[o]
                     ? 1.0 / pairs.size()
                     : joint_count[static_cast<std::size_t>(o) * dims_product(other_obs_dims) +
                                   p.other_obs] /
                           mass;
      std::vector<int> others_o = split_index(p.other_obs, other_obs_dims);
      std::vector<int> others_a = split_index(p.other_action, other_action_dims);
      std::vector<int> full_o(n_agents), full_a(n_agents);
      int k = 0;
      for (int i = 0; i < n_agents; ++i)
        if (i != agent) {
          full_o[i] = others_o[k];
          full_a[i] = others_a[k];
          ++k;
        }
      full_o[agent] = o;
      int jo = joint_index(full_o, obs_dims);
      for (int a = 0; a < action_dims[agent]; ++a) {
        full_a[agent] = a;
        set.vectors[o][bi * set.block_size + a] =
            q_table.at(jo, joint_index(full_a, action_dims)) * w;
      }
    }
  }
  return set;
}

std::string message_function_csv(const MessageFunction& fn) {
  std::string out = "# schema: agent,observation,label";
  for (int m = 0; m < fn.alphabet_size; ++m) out += ",p_" + std::to_string(m);
  out += "\n";
  char buf[64];
  for (std::size_t o = 0; o < fn.assign.size(); ++o) {
    out += std::to_string(fn.agent) + "," + std::to_string(o) + "," +
           std::to_string(fn.hard_label(static_cast<int>(o)));
    for (int m = 0; m < fn.alphabet_size; ++m) {
      std::snprintf(buf, sizeof buf, ",%.17g", fn.assign[o][m]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace commgap
