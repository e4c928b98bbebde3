#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "commgap/cluster_comm.hpp"
#include "commgap/gap.hpp"

namespace commgap {

// Golden-value comparison for the built-in illustrative matrix game.
struct ExampleResult {
  GapReport report;
  std::vector<std::string> failures;  // empty iff every golden matched
  std::string log;
};
ExampleResult run_example(int alphabet_size);

struct BoundSweepSummary {
  int rows = 0;
  int violations = 0;
  double max_ratio = 0.0;  // max gap/bound over rows with bound > 0
  std::string csv;
};
BoundSweepSummary run_bound_sweep(int trials, const std::vector<int>& max_sizes,
                                  const std::vector<int>& labels, std::uint64_t seed);

// Maze experiment: independent-Q, centralized-Q and cluster-comm with three
// activation variants, over a seed list. Curves are exact greedy-policy returns.
struct MazeVariantResult {
  std::string name;
  std::vector<std::vector<EvalPoint>> curves;  // per seed
  double final_mean = 0.0;
  double final_std = 0.0;
};
struct MazeRunResult {
  std::vector<MazeVariantResult> variants;
  std::string curves_csv;
  std::vector<std::string> message_map_csvs;  // per agent, tanh variant
};
MazeRunResult run_maze(const std::vector<std::uint64_t>& seeds, int episodes, int alphabet_size,
                       double r_high = 1.0, double r_low = 0.5);

// Gnuplot-style columnar files derived from run outputs found in `run_dir`.
// Returns the list of files written; throws with the missing-artifact list when
// the directory has nothing usable.
std::vector<std::string> emit_plotdata(const std::string& run_dir, const std::string& out_dir);

void write_file(const std::string& path, const std::string& content);

}  // namespace commgap
