#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "commgap/learner.hpp"
#include "commgap/rng.hpp"

namespace commgap {

// Per-observation weighted action-value vectors for one agent. Each vector is
// laid out in blocks, one per joint observation of the other agents, each block
// holding the joint-action values scaled by the conditional visitation weight
// of that other-observation.
struct QVectorSet {
  int agent = 0;
  int n_blocks = 0;
  int block_size = 0;
  std::vector<std::vector<double>> vectors;  // indexed by o_agent
  std::vector<double> weights;               // visitation marginal d(o_agent)
  std::vector<char> zero_visit;              // o_agent had zero visitation (uniform fallback)

  int dim() const { return n_blocks * block_size; }
  int size() const { return static_cast<int>(vectors.size()); }
};

// Soft assignment of observations to message labels; the hard label is the
// argmax with lowest-index tie-break.
struct MessageFunction {
  int agent = 0;
  int alphabet_size = 1;
  std::vector<std::vector<double>> assign;  // assign[o] over labels, rows sum to 1

  int hard_label(int o) const;
  std::vector<int> hard_labels() const;
  static MessageFunction from_labels(int agent, int alphabet_size, const std::vector<int>& labels);
  static MessageFunction constant(int agent, int n_obs);
  static MessageFunction identity(int agent, int n_obs);
};

enum class WeightMode { kDistanceAsWritten, kSimilarity };
enum class RimSolver { kExhaustive, kCoordinateDescent, kSoftGradient };
enum class Activation { kNone, kTanh, kSoftmax };

struct RimConfig {
  double lambda = 0.1;
  int k_neighbors = 1;  // callers clamp to size-1
  int k1 = 256;
  int k2 = 64;
  WeightMode weight_mode = WeightMode::kDistanceAsWritten;
  RimSolver solver = RimSolver::kCoordinateDescent;
  int restarts = 20;
  std::uint64_t seed = 1;
};

// Cosine distance 1 - u.v/(|u||v|), in [0, 2]. Throws on a zero vector.
double cosine_distance(const std::vector<double>& u, const std::vector<double>& v);

// Assembles the weighted action-value vectors of one agent from a centralized
// table and a visitation distribution over joint observations. Observations of
// the other agents with zero conditional visitation get uniform weights and a
// zero_visit flag.
QVectorSet build_qvectors(const ActionValueTable& q_table, const std::vector<double>& visitation,
                          int agent, const std::vector<int>& obs_dims,
                          const std::vector<int>& action_dims);

// Componentwise activation f((v - alpha) / beta). With auto_scale, alpha =
// (max + min)/2 and beta = max over all raw components of the batch; if the
// resulting beta is 0 the transform degrades to the identity (flag returned in
// the set is unchanged). Softmax normalizes each vector to a probability
// simplex; kNone is the identity.
QVectorSet normalize_activation(const QVectorSet& vectors, Activation activation,
                                double alpha = 0.0, double beta = 0.0, bool auto_scale = true);

// Empirical mutual information I(o; m) in nats under obs_weights and the soft
// assignment rows.
double mutual_information(const MessageFunction& fn, const std::vector<double>& obs_weights);

// RIM objective L_CD - lambda * I(o; m) over the k-nearest-neighbor graph of
// the vectors under cosine distance.
double rim_loss(const MessageFunction& fn, const QVectorSet& vectors,
                const std::vector<double>& obs_weights, const RimConfig& config);

// Fits a message function of the given alphabet size by minimizing rim_loss.
MessageFunction fit_messages(const QVectorSet& vectors, const std::vector<double>& obs_weights,
                             int alphabet_size, const RimConfig& config);

// Most frequent other-agent (joint observation, joint action) pairs in the
// buffer; ties broken by first-seen order. Returns fewer when the buffer holds
// fewer distinct pairs.
struct ObsActionPair {
  int other_obs;     // joint observation of agents != agent, mixed-radix
  int other_action;  // joint action of agents != agent, mixed-radix
  int count;
};
std::vector<ObsActionPair> top_k2_frequent(const ReplayBuffer& buffer, int agent, int k2,
                                           const std::vector<int>& obs_dims,
                                           const std::vector<int>& action_dims);

// Model-free vector assembly per the K1/K2 sampling scheme: sample K1
// transitions, keep the K2 most frequent other-agent observation-action pairs,
// and build one block per kept pair from the learned centralized table, scaled
// by the empirical conditional frequency of the pair's other-observation.
QVectorSet build_qvectors_sampled(const ActionValueTable& q_table, const ReplayBuffer& buffer,
                                  int agent, const std::vector<int>& obs_dims,
                                  const std::vector<int>& action_dims, const RimConfig& config,
                                  Rng& rng);

// CSV serialization: `agent, observation, label, p_0..p_{|M|-1}` per row.
std::string message_function_csv(const MessageFunction& fn);

}  // namespace commgap
