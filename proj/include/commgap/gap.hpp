#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "commgap/comm.hpp"
#include "commgap/env.hpp"
#include "commgap/learner.hpp"

namespace commgap {

// Discounted visitation distribution over joint observations (forward
// accumulation of gamma^t * P(o_t = o), normalized to sum 1; for finite-horizon
// environments only pre-terminal steps count).
struct VisitationDist {
  std::vector<double> d;  // over joint observations
  double gamma = 0.0;

  double marginal(int agent, int obs, const std::vector<int>& obs_dims) const;
};

VisitationDist visitation(const DecPomdpSpec& env, const JointPolicy& policy, double tol = 1e-12);

// Exact expected return of a deterministic joint policy. Finite horizon:
// gamma^t-discounted forward dynamic program; infinite horizon: policy
// evaluation to `tol` and J = (1 - gamma) * E_mu[V].
double expected_return(const DecPomdpSpec& env, const JointPolicy& policy, double gamma = -1.0,
                       double tol = 1e-13);

// Monte Carlo cross-check of expected_return.
double mc_return(const DecPomdpSpec& env, const JointPolicy& policy, int episodes,
                 std::uint64_t seed);

// Cluster centers and average cosine distance of a clustered QVectorSet.
// obs weights are taken from the set itself (visitation marginals); zero-weight
// observations are excluded, and members of a zero-norm cluster center
// contribute distance 1 each.
struct ClusterGeometry {
  std::vector<std::vector<double>> centers;  // per label
  std::vector<double> per_obs_eps;           // -1 for excluded observations
  double eps = 0.0;
  double q_max = 0.0;  // max L2 norm over the weighted vectors
};

ClusterGeometry cluster_geometry(const QVectorSet& vectors, const MessageFunction& fn);

// Return of the policy that, given (o_other, label m), takes the joint action
// maximizing the cluster-center vector's block: sum_m d(m) * Phi_max(H(m)).
// One-step matrix games only.
double center_policy_value(const MatrixGameSpec& game, const MessageFunction& fn,
                           const QVectorSet& raw_vectors);

// Optimal deterministic communication-conditioned policy for a one-step matrix
// game where agent 2 broadcasts labels of its observation: agent 1 conditions
// on (o1, m), agent 2 on o2. Exact; enumeration over agent-2 action maps is
// capped at 1e6.
struct CommPolicy {
  std::vector<int> a1;  // index (o1 * |M| + m) -> action of agent 1
  std::vector<int> a2;  // o2 -> action of agent 2
  double value = 0.0;
};
CommPolicy brute_force_comm_policy(const MatrixGameSpec& game, const MessageFunction& fn);

// Optimal full-observability return max over joint actions per joint obs.
double full_observability_return(const MatrixGameSpec& game);

struct GapReport {
  std::string env_id;
  int n_labels = 0;
  double j_full = 0.0;
  double j_comm = 0.0;
  double j_nocomm = 0.0;
  double gap = 0.0;
  std::vector<double> eps_per_agent;
  std::vector<double> q_max_per_agent;
  double bound = 0.0;         // sum_j q_max_j * sqrt(2 eps_j)
  double q_max_abs = 0.0;     // max |Q| entry, reported alongside
  bool holds = false;
  std::vector<int> labels;    // fitted hard labels of agent 2's observations

  std::string csv_row() const;
  static std::string csv_header();
  std::string summary() const;
};

// Full pipeline on a one-step matrix game: exact Q, visitation, vectors,
// clustering (tanh-normalized by default), brute-force comm policy, geometry,
// bound check.
GapReport gap_report(const MatrixGameSpec& game, int alphabet_size, const RimConfig& config,
                     Activation activation = Activation::kTanh);

// Per-|M| minimum-eps clustering found by exhaustive search, with the gap of
// that clustering's optimal comm policy.
struct MonotonicityRow {
  int n_labels;
  double best_eps;
  double gap;
};
std::vector<MonotonicityRow> label_monotonicity_check(const MatrixGameSpec& game, int max_labels);

}  // namespace commgap
