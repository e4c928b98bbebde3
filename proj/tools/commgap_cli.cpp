// Command-line driver for the communication-gap laboratory.
//
// Subcommands:
//   example      run the built-in illustrative matrix game and diff goldens
//   bound-sweep  random one-step games, gap-vs-bound CSV
//   maze         4x4 grid maze training run (all baselines + comm variants)
//   matrix       gap report for a matrix game spec file
//   plotdata     gnuplot-style columnar files from a run directory

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commgap/experiment.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"communication-gap laboratory"};
  app.require_subcommand(1);

  std::string out_dir = "out";
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.fallthrough();  // let --out appear after the subcommand name too

  // example
  auto* example = app.add_subcommand("example", "illustrative matrix game with golden checks");
  int example_labels = 2;
  example->add_option("--labels", example_labels, "message alphabet size")->capture_default_str();

  // bound-sweep
  auto* sweep = app.add_subcommand("bound-sweep", "return-gap bound verification sweep");
  int trials = 1000;
  std::uint64_t sweep_seed = 1;
  std::vector<int> sweep_labels = {1, 2, 3};
  std::vector<int> sweep_sizes = {3, 6, 3, 1};
  sweep->add_option("--trials", trials)->capture_default_str();
  sweep->add_option("--seed", sweep_seed)->capture_default_str();
  sweep->add_option("--labels", sweep_labels, "comma-separated label counts")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--sizes", sweep_sizes, "max |O1|,|O2|,|A1|,|A2|")
      ->delimiter(',')
      ->capture_default_str();

  // maze
  auto* maze = app.add_subcommand("maze", "4x4 grid maze experiment");
  std::vector<std::uint64_t> maze_seeds = {1, 2, 3, 4, 5};
  int maze_episodes = 40000;
  int maze_labels = 4;
  std::string activation = "all";
  maze->add_option("--seeds", maze_seeds)->delimiter(',')->capture_default_str();
  maze->add_option("--episodes", maze_episodes)->capture_default_str();
  maze->add_option("--labels", maze_labels)->capture_default_str();
  maze->add_option("--activation", activation, "tanh|softmax|none|all (informational filter)")
      ->capture_default_str();

  // matrix
  auto* matrix = app.add_subcommand("matrix", "gap report for a matrix game spec file");
  std::string spec_path;
  int matrix_labels = 2;
  matrix->add_option("--spec", spec_path, "JSON game spec")->required();
  matrix->add_option("--labels", matrix_labels)->capture_default_str();

  // plotdata
  auto* plot = app.add_subcommand("plotdata", "columnar plot files from a run directory");
  std::string run_dir;
  plot->add_option("--run", run_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);
  namespace fs = std::filesystem;

  try {
    if (example->parsed()) {
      commgap::ExampleResult r = commgap::run_example(example_labels);
      std::cout << "illustrative example, |M| = " << example_labels << "\n" << r.log;
      std::cout << r.report.summary();
      // Gap reports across label counts, for plotdata.
      std::ostringstream csv;
      csv << commgap::GapReport::csv_header() << "\n";
      commgap::RimConfig cfg;
      cfg.solver = commgap::RimSolver::kExhaustive;
      for (int m : {1, 2, 4})
        csv << commgap::gap_report(commgap::fig1_matrix_game(), m, cfg).csv_row() << "\n";
      commgap::write_file((fs::path(out_dir) / "gap_reports.csv").string(), csv.str());
      if (!r.failures.empty()) {
        std::cout << "FAILED: " << r.failures.size() << " golden mismatch(es)\n";
        return 1;
      }
      std::cout << "all goldens match\n";
      return 0;
    }
    if (sweep->parsed()) {
      commgap::BoundSweepSummary s =
          commgap::run_bound_sweep(trials, sweep_sizes, sweep_labels, sweep_seed);
      commgap::write_file((fs::path(out_dir) / "gap_reports.csv").string(), s.csv);
      std::printf("rows=%d violations=%d max gap/bound ratio=%.6f\n", s.rows, s.violations,
                  s.max_ratio);
      return s.violations == 0 ? 0 : 1;
    }
    if (maze->parsed()) {
      commgap::MazeRunResult r = commgap::run_maze(maze_seeds, maze_episodes, maze_labels);
      commgap::write_file((fs::path(out_dir) / "curves.csv").string(), r.curves_csv);
      for (std::size_t i = 0; i < r.message_map_csvs.size(); ++i)
        commgap::write_file(
            (fs::path(out_dir) / ("message_map_agent" + std::to_string(i) + ".csv")).string(),
            r.message_map_csvs[i]);
      for (const auto& v : r.variants)
        std::printf("%-14s final return %.6f +- %.6f\n", v.name.c_str(), v.final_mean,
                    v.final_std);
      return 0;
    }
    if (matrix->parsed()) {
      commgap::MatrixGameSpec game = commgap::load_matrix_game(slurp(spec_path));
      commgap::RimConfig cfg;
      commgap::GapReport r = commgap::gap_report(game, matrix_labels, cfg);
      std::cout << r.summary();
      std::ostringstream csv;
      csv << commgap::GapReport::csv_header() << "\n" << r.csv_row() << "\n";
      commgap::write_file((fs::path(out_dir) / "gap_reports.csv").string(), csv.str());
      return r.holds ? 0 : 1;
    }
    if (plot->parsed()) {
      auto files = commgap::emit_plotdata(run_dir, out_dir);
      for (const auto& f : files) std::cout << "wrote " << f << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
