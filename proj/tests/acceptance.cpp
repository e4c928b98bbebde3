// Acceptance suite: one pass/fail line per criterion, non-zero exit on any
// failure. Each criterion is self-contained and prints its elapsed time.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "commgap/experiment.hpp"

using namespace commgap;

namespace {

int g_failures = 0;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int index, const std::string& name, bool ok, double secs,
            const std::string& detail) {
  std::printf("[%s] criterion %d: %-28s (%.2fs) %s\n", ok ? "PASS" : "FAIL", index,
              name.c_str(), secs, detail.c_str());
  if (!ok) ++g_failures;
}

// --- criterion 1: exact golden values on the built-in illustrative game ------
void criterion_goldens() {
  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> failures;
  for (int m : {2, 1, 4}) {
    ExampleResult r = run_example(m);
    failures.insert(failures.end(), r.failures.begin(), r.failures.end());
  }
  std::string detail = failures.empty() ? "all golden values within 1e-9" : "mismatches:";
  for (const auto& f : failures) detail += " " + f;
  report(1, "example goldens", failures.empty(), seconds_since(t0), detail);
}

// --- criterion 2: clustering recovery on the built-in game -------------------
void criterion_clustering() {
  auto t0 = std::chrono::steady_clock::now();
  MatrixGameSpec game = fig1_matrix_game();
  DecPomdpSpec env = game.to_dec_pomdp();
  ActionValueTable q = value_iteration(env);
  std::vector<double> d(env.joint_obs_count(), 1.0 / env.joint_obs_count());
  QVectorSet raw = build_qvectors(q, d, 1, env.obs_dims, env.action_dims);
  QVectorSet set = normalize_activation(raw, Activation::kTanh);
  std::vector<double> w = set.weights;

  RimConfig cfg;
  cfg.solver = RimSolver::kExhaustive;
  MessageFunction ex = fit_messages(set, w, 2, cfg);
  auto l = ex.hard_labels();
  bool partition = l[0] == l[2] && l[1] == l[3] && l[0] != l[1];

  cfg.solver = RimSolver::kCoordinateDescent;
  cfg.restarts = 20;
  MessageFunction cd = fit_messages(set, w, 2, cfg);
  cfg.solver = RimSolver::kExhaustive;
  double loss_ex = rim_loss(ex, set, w, cfg);
  double loss_cd = rim_loss(cd, set, w, cfg);
  bool solver_match = std::abs(loss_cd - loss_ex) <= 1e-9;

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "labels [%d %d %d %d], exhaustive loss %.6g, coord-descent loss %.6g", l[0], l[1],
                l[2], l[3], loss_ex, loss_cd);
  report(2, "clustering recovery", partition && solver_match, seconds_since(t0), buf);
}

// --- criterion 3: bound soundness over random games --------------------------
void criterion_bound_sweep() {
  auto t0 = std::chrono::steady_clock::now();
  BoundSweepSummary s = run_bound_sweep(1000, {6, 6, 6, 1}, {1, 2, 3}, 20240501);
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d reports, %d violations, max gap/bound %.4f", s.rows,
                s.violations, s.max_ratio);
  report(3, "bound soundness", s.violations == 0 && s.rows >= 3000, seconds_since(t0), buf);
}

// --- criterion 4: eps monotone in the label budget, zero gap at full budget --
void criterion_monotonicity() {
  auto t0 = std::chrono::steady_clock::now();
  int bad = 0, games = 0;
  auto check_game = [&](const MatrixGameSpec& game) {
    ++games;
    int max_labels = game.obs_dims[1];
    auto rows = label_monotonicity_check(game, max_labels);
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].best_eps > rows[i - 1].best_eps + 1e-9) ++bad;
    if (std::abs(rows.back().best_eps) > 1e-9 || std::abs(rows.back().gap) > 1e-9) ++bad;
  };
  check_game(fig1_matrix_game());
  Rng meta(7117);
  for (int t = 0; t < 100; ++t) {
    std::vector<int> sizes = {1 + meta.below(4), 2 + meta.below(4), 1 + meta.below(4), 1};
    check_game(gen_random_game(sizes, 0.0, 100.0, meta.raw()));
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "%d games, %d monotonicity violations", games, bad);
  report(4, "eps/gap monotonicity", bad == 0, seconds_since(t0), buf);
}

// --- criterion 5: maze final-return ordering over seeds ----------------------
void criterion_maze() {
  auto t0 = std::chrono::steady_clock::now();
  MazeRunResult r = run_maze({1, 2, 3, 4, 5}, 30000, 4);
  auto final_of = [&](const std::string& name) {
    for (const auto& v : r.variants)
      if (v.name == name) return v.final_mean;
    return -1.0;
  };
  double central = final_of("centralized-q");
  double indep = final_of("independent-q");
  double tanh_v = final_of("comm-tanh");
  double softmax_v = final_of("comm-softmax");
  double none_v = final_of("comm-none");
  bool ok = central >= tanh_v - 1e-12 && tanh_v >= 0.9 * central && tanh_v > indep &&
            tanh_v >= softmax_v - 1e-12 && tanh_v >= none_v - 1e-12;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "central %.4f, comm-tanh %.4f, comm-softmax %.4f, comm-none %.4f, indep %.4f",
                central, tanh_v, softmax_v, none_v, indep);
  report(5, "maze return ordering", ok, seconds_since(t0), buf);
}

// --- criterion 6: randomized numerical invariants ----------------------------
void criterion_invariants() {
  auto t0 = std::chrono::steady_clock::now();
  int bad = 0;
  Rng rng(4242);

  // Cosine-distance axioms on random vectors.
  for (int i = 0; i < 300; ++i) {
    int dim = 2 + rng.below(5);
    std::vector<double> u(dim), v(dim);
    for (int j = 0; j < dim; ++j) {
      u[j] = rng.uniform(-1.0, 1.0);
      v[j] = rng.uniform(-1.0, 1.0);
    }
    double nu = 0.0, nv = 0.0;
    for (int j = 0; j < dim; ++j) {
      nu += u[j] * u[j];
      nv += v[j] * v[j];
    }
    if (nu == 0.0 || nv == 0.0) continue;
    double d = cosine_distance(u, v);
    if (d < -1e-12 || d > 2.0 + 1e-12) ++bad;
    if (std::abs(d - cosine_distance(v, u)) > 1e-12) ++bad;
    if (std::abs(cosine_distance(u, u)) > 1e-12) ++bad;
    std::vector<double> u3 = u;
    for (double& x : u3) x *= 3.0;
    if (std::abs(cosine_distance(u3, v) - d) > 1e-10) ++bad;
  }

  // Visitation and assignment normalization on random maze policies.
  {
    DecPomdpSpec env = MazeSpec{}.to_dec_pomdp();
    for (int t = 0; t < 5; ++t) {
      JointPolicy policy(env.joint_obs_count());
      for (auto& a : policy) a = rng.below(env.joint_action_count());
      VisitationDist d = visitation(env, policy);
      double sum = 0.0;
      for (double x : d.d) {
        if (x < -1e-15) ++bad;
        sum += x;
      }
      if (std::abs(sum - 1.0) > 1e-9) ++bad;
    }
  }

  // TD fixed point vs value iteration: converged TD backups on the one-step
  // game (deterministic rewards) must match the planning table in sup norm.
  {
    DecPomdpSpec env = fig1_matrix_game().to_dec_pomdp();
    ActionValueTable vi = value_iteration(env, 1e-13);
    ActionValueTable td(env.joint_obs_count(), env.joint_action_count());
    Rng trng(9);
    for (int it = 0; it < 400000; ++it) {
      auto [state, obs] = reset(env, trng);
      int ja = trng.below(env.joint_action_count());
      StepResult sr = step_joint(env, state, ja, 0, trng);
      td_update(td, env.obs_of(state), ja, sr.transition.reward, 0, sr.transition.done, 0.05,
                env.gamma);
    }
    double sup = 0.0;
    for (int k = 0; k < vi.n_keys(); ++k)
      for (int a = 0; a < vi.n_actions(); ++a)
        sup = std::max(sup, std::abs(vi.at(k, a) - td.at(k, a)));
    if (sup > 1e-9) ++bad;  // one-step game: TD fixed point is exact
  }

  // MI bounds and label-permutation symmetry on random soft assignments.
  for (int t = 0; t < 60; ++t) {
    int n = 3 + rng.below(4), m = 2 + rng.below(3);
    MessageFunction fn;
    fn.alphabet_size = m;
    fn.assign.assign(n, std::vector<double>(m));
    std::vector<double> w(n);
    double ws = 0.0;
    for (int o = 0; o < n; ++o) {
      double rs = 0.0;
      for (int j = 0; j < m; ++j) rs += fn.assign[o][j] = rng.uniform(0.01, 1.0);
      for (int j = 0; j < m; ++j) fn.assign[o][j] /= rs;
      ws += w[o] = rng.uniform(0.01, 1.0);
    }
    for (double& x : w) x /= ws;
    double mi = mutual_information(fn, w);
    double h_o = 0.0;
    for (double x : w) h_o -= x * std::log(x);
    std::vector<double> pm(m, 0.0);
    for (int o = 0; o < n; ++o)
      for (int j = 0; j < m; ++j) pm[j] += w[o] * fn.assign[o][j];
    double h_m = 0.0;
    for (double x : pm)
      if (x > 0) h_m -= x * std::log(x);
    if (mi < -1e-10 || mi > std::min(h_o, h_m) + 1e-10) ++bad;

    // Swapping two label columns leaves I, rim_loss and eps unchanged.
    MessageFunction swapped = fn;
    for (int o = 0; o < n; ++o) std::swap(swapped.assign[o][0], swapped.assign[o][1]);
    if (std::abs(mutual_information(swapped, w) - mi) > 1e-12) ++bad;

    QVectorSet set;
    set.agent = 0;
    set.n_blocks = 1;
    set.block_size = 3;
    set.vectors.assign(n, std::vector<double>(3));
    for (auto& v : set.vectors)
      for (double& x : v) x = rng.uniform(0.05, 1.0);
    set.weights = w;
    set.zero_visit.assign(n, 0);
    RimConfig cfg;
    if (std::abs(rim_loss(fn, set, w, cfg) - rim_loss(swapped, set, w, cfg)) > 1e-10) ++bad;
    auto hard = fn.hard_labels();
    auto hard_swapped = hard;
    for (int& x : hard_swapped) x = x == 0 ? 1 : (x == 1 ? 0 : x);
    double e1 = cluster_geometry(set, MessageFunction::from_labels(0, m, hard)).eps;
    double e2 = cluster_geometry(set, MessageFunction::from_labels(0, m, hard_swapped)).eps;
    if (std::abs(e1 - e2) > 1e-10) ++bad;
  }

  char buf[80];
  std::snprintf(buf, sizeof buf, "%d invariant violations", bad);
  report(6, "numerical invariants", bad == 0, seconds_since(t0), buf);
}

// --- criterion 7: byte-identical CSV outputs across repeated runs ------------
void criterion_determinism() {
  auto t0 = std::chrono::steady_clock::now();
  bool ok = true;

  BoundSweepSummary s1 = run_bound_sweep(20, {4, 4, 3, 1}, {1, 2}, 99);
  BoundSweepSummary s2 = run_bound_sweep(20, {4, 4, 3, 1}, {1, 2}, 99);
  ok = ok && s1.csv == s2.csv;

  RimConfig cfg;
  GapReport g1 = gap_report(fig1_matrix_game(), 2, cfg);
  GapReport g2 = gap_report(fig1_matrix_game(), 2, cfg);
  ok = ok && g1.csv_row() == g2.csv_row();

  MazeRunResult m1 = run_maze({3}, 600, 4);
  MazeRunResult m2 = run_maze({3}, 600, 4);
  ok = ok && m1.curves_csv == m2.curves_csv && m1.message_map_csvs == m2.message_map_csvs;

  report(7, "CSV determinism", ok, seconds_since(t0),
         ok ? "sweep, report and maze outputs byte-identical" : "outputs differ between runs");
}

}  // namespace

int main() {
  criterion_goldens();
  criterion_clustering();
  criterion_bound_sweep();
  criterion_monotonicity();
  criterion_maze();
  criterion_invariants();
  criterion_determinism();
  if (g_failures == 0) {
    std::printf("acceptance: all 7 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", g_failures);
  return 1;
}
