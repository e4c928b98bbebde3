#pragma once

#include <vector>

#include "commgap/comm.hpp"
#include "commgap/gap.hpp"
#include "commgap/learner.hpp"

namespace commgap {

// Configuration for interleaved communication learning: comm-conditioned
// Q-learning epochs alternating with message-function refits computed from the
// concurrently learned centralized table via replay sampling.
struct ClusterCommConfig {
  RimConfig rim;
  Activation activation = Activation::kTanh;
  int alphabet_size = 4;
  double warmup_frac = 0.2;  // first refit after this fraction of episodes
  double refit_frac = 0.1;   // then refit every this fraction
};

struct ClusterCommResult {
  std::vector<ActionValueTable> per_agent;   // comm-conditioned tables
  ActionValueTable centralized;              // learned joint-observation table
  std::vector<MessageFunction> message_fns;  // one per agent
  CommKeying keying;                         // hard labels used for execution
  std::vector<EvalPoint> curve;
};

ClusterCommResult train_cluster_comm(const DecPomdpSpec& env, const ClusterCommConfig& comm_config,
                                     const LearnConfig& learn_config);

}  // namespace commgap
