// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "otgraph/experiments.hpp"
#include "support.hpp"

using namespace otgraph;
using namespace otgraph::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int jobs() { return resolve_jobs(std::nullopt); }

// The normalized closed spiral, N = 1000 in 100 dimensions, seed 1.
const SpiralData& spiral() {
  static const SpiralData data = make_eigen_spiral_data(ExperimentConfig::defaults(ExperimentKind::EigenSpiral), 1);
  return data;
}

const CostMatrix& spiral_cost() {
  static const CostMatrix c = pairwise_cost(spiral().noisy);
  return c;
}

const QotSolution& spiral_qot() {
  static const QotSolution s = solve_qot(spiral_cost(), QotConfig{.epsilon = 1.0});
  return s;
}

// Small random instances shared by criteria 1 and 10.
struct SmallInstance {
  CostMatrix cost;
  Index n;
};

const std::vector<SmallInstance>& small_instances() {
  static const std::vector<SmallInstance> all = [] {
    SeededRng rng(2024);
    std::vector<SmallInstance> out;
    for (int k = 0; k < 20; ++k) {
      const Index n = 3 + static_cast<Index>(rng.below(6));
      out.push_back({pairwise_cost(random_cloud(rng, n, 3)), n});
    }
    return out;
  }();
  return all;
}

constexpr double kEpsilons[] = {0.1, 1.0, 10.0};

Outcome oracle_equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& inst : small_instances()) {
    for (double eps : kEpsilons) {
      const DenseMatrix newton = dense(solve_qot(inst.cost, QotConfig{.epsilon = eps}).plan);
      const DenseMatrix oracle = dense(projection_oracle(inst.cost, eps));
      worst = std::max(worst, (newton - oracle).cwiseAbs().maxCoeff());
    }
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-5 && t < 60.0, fmt("max |newton - oracle| = %.3g (tol 1e-5), %.1f s (limit 60 s)", worst, t)};
}

Outcome kkt_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  const QotSolution& s = spiral_qot();
  const CostMatrix& c = spiral_cost();
  const DenseMatrix pi = dense(s.plan);
  const Vector& u = s.duals.u;
  const double residual = s.plan.marginal_residual();
  const bool symmetric = exactly_symmetric(s.plan.pi);
  const bool nonnegative = pi.minCoeff() >= 0.0;
  double slack = complementary_slackness(s.plan, u, c, 1.0);
  // Zero entries need u_i + u_j - c_ij <= 0.
  for (Index j = 0; j < pi.cols(); ++j) {
    for (Index i = 0; i < pi.rows(); ++i) {
      if (pi(i, j) == 0.0 && std::isfinite(c.c(i, j))) slack = std::max(slack, u[i] + u[j] - c.c(i, j));
    }
  }
  bool monotone = true;
  for (double d : s.diagnostics.phi_change) monotone = monotone && d <= 0.0;
  const double t = seconds_since(t0);
  return {residual <= 1e-8 && symmetric && nonnegative && slack <= 1e-8 && monotone && t < 120.0,
          fmt("residual %.3g (tol 1e-8), symmetric %d, nonnegative %d, slackness %.3g (tol 1e-8), "
              "phi monotone over %zu steps %d, %.1f s (limit 120 s)",
              residual, symmetric, nonnegative, slack, s.diagnostics.phi_change.size(), monotone, t)};
}

Outcome sparsity() {
  const double n2 = static_cast<double>(spiral_cost().size()) * static_cast<double>(spiral_cost().size());
  std::vector<Index> nnz;
  for (double eps : logspace(-1.5, 1.5, 12)) {
    nnz.push_back(solve_qot(spiral_cost(), QotConfig{.epsilon = eps}).plan.off_diagonal_nnz());
  }
  const bool sparse = static_cast<double>(nnz.front()) < 0.1 * n2;
  const bool increasing = std::is_sorted(nnz.begin(), nnz.end());
  return {sparse && increasing,
          fmt("off-diagonal nnz %ld at eps=10^-1.5 (limit %.0f), %ld at eps=10^1.5, non-decreasing %d",
              static_cast<long>(nnz.front()), 0.1 * n2, static_cast<long>(nnz.back()), increasing)};
}

Outcome entropic_contrast() {
  const EntropicSolution s = solve_entropic(spiral_cost(), 1.0);
  const DenseMatrix pi = dense(s.plan);
  const double min = pi.minCoeff();
  const double rows = (pi.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (pi.colwise().sum().array() - 1.0).abs().maxCoeff();
  return {min > 0.0 && rows <= 1e-6 && cols <= 1e-6,
          fmt("min entry %.3g (> 0), row error %.3g, column error %.3g (tol 1e-6)", min, rows, cols)};
}

std::map<std::uint64_t, std::map<std::string, double>> best_by_seed(const json& summary, const json& variant) {
  std::map<std::uint64_t, std::map<std::string, double>> out;
  for (const auto& b : summary["best"]) {
    if (b["variant"] != variant || b["value"].is_null()) continue;
    out[b["seed"].get<std::uint64_t>()][b["method"].get<std::string>()] = b["value"].get<double>();
  }
  return out;
}

std::vector<double> llgc_gradients;

void collect_gradients(const SweepResult& r) {
  for (const auto& rec : r.records) {
    if (rec.ok()) llgc_gradients.push_back(rec.details.at("llgc_relative_gradient").get<double>());
  }
}

Outcome eigen_ordering() {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentKind::EigenSpiral);
  const SweepResult r = run_sweep(cfg, jobs());
  const double t = seconds_since(t0);
  int good = 0;
  std::string values;
  for (const auto& [seed, m] : best_by_seed(r.summary, json::object())) {
    const double q = m.at("qot"), knn = m.at("knn-gauss"), magic = m.at("magic");
    const double ent = m.at("entot"), gauss = m.at("gauss");
    const bool ok = q < std::min(knn, magic) && std::max(knn, magic) < std::min(ent, gauss);
    good += ok;
    values += fmt(" [seed %lu: qot %.3f knn %.3f magic %.3f entot %.3f gauss %.3f]", static_cast<unsigned long>(seed),
                  q, knn, magic, ent, gauss);
  }
  return {good >= 4 && t < 1800.0, fmt("ordering holds in %d of 5 seeds (need 4), %.0f s (limit 1800 s);", good, t) + values};
}

Outcome reference_circle() {
  const double cv = radius_variation(eigenmap(reference_graph(spiral().clean), 2));
  return {cv <= 0.05, fmt("radius coefficient of variation %.4f (limit 0.05)", cv)};
}

Outcome ssl_dominance() {
  const SweepResult r = run_sweep(ExperimentConfig::defaults(ExperimentKind::SslSpiral), jobs());
  collect_gradients(r);
  int good = 0;
  std::string values;
  for (const auto& [seed, m] : best_by_seed(r.summary, json{{"per_arm", 150}})) {
    good += m.at("qot") >= m.at("knn-gauss");
    values += fmt(" [seed %lu: qot %.3f knn %.3f]", static_cast<unsigned long>(seed), m.at("qot"), m.at("knn-gauss"));
  }
  return {good >= 4, fmt("qot >= knn-gauss in %d of 5 seeds (need 4);", good) + values};
}

Outcome epsilon_stability() {
  const ExperimentConfig cfg = ExperimentConfig::defaults(ExperimentKind::SslDensity);
  const SweepResult r = run_sweep(cfg, jobs());
  collect_gradients(r);
  bool pass = true;
  std::string values;
  for (int per_arm : cfg.per_arm) {
    const json variant{{"per_arm", per_arm}};
    std::map<std::uint64_t, double> at_one;
    for (const auto& rec : r.records) {
      if (rec.variant == variant && rec.ok() && rec.params.at("epsilon").get<double>() == 1.0) at_one[rec.seed] = rec.value;
    }
    std::vector<double> gaps;
    for (const auto& [seed, m] : best_by_seed(r.summary, variant)) {
      gaps.push_back(at_one.count(seed) ? m.at("qot") - at_one[seed] : 1.0);
    }
    std::sort(gaps.begin(), gaps.end());
    const double median = gaps.empty() ? 1.0 : gaps[gaps.size() / 2];
    pass = pass && gaps.size() == cfg.seeds.size() && median <= 0.02;
    values += fmt(" [%d per arm: median gap %.3f]", per_arm, median);
  }
  return {pass, "best-over-grid minus accuracy at eps=1 (limit 0.02);" + values};
}

Outcome llgc_stationarity() {
  if (llgc_gradients.empty()) return {false, "no solved instances (run criteria 7 and 8 first)"};
  const double worst = *std::max_element(llgc_gradients.begin(), llgc_gradients.end());
  return {worst <= 1e-6, fmt("max relative gradient %.3g over %zu solves (tol 1e-6)", worst, llgc_gradients.size())};
}

Outcome gradient_checks() {
  SeededRng rng(99);
  double worst = 0.0;
  int checks = 0;
  for (const auto& inst : small_instances()) {
    for (double eps : kEpsilons) {
      for (int k = 0; k < 20; ++k) {
        const Vector u = kink_free_duals(rng, inst.cost, 1.5, 1e-3);
        worst = std::max(worst, gradient_check(u, inst.cost, eps, 1e-5));
        ++checks;
      }
    }
  }
  return {worst <= 1e-6, fmt("max relative error %.3g over %d points (tol 1e-6)", worst, checks)};
}

Outcome denoise_invariants() {
  const RowStochasticGraph w = row_normalize(plan_to_graph(spiral_qot().plan));
  const DenseMatrix& x = spiral().noisy.points;
  const bool identity = magic_denoise(w, x, 0) == x;
  DenseMatrix c = x;
  c.col(0).setConstant(0.75);
  double constant = 0.0;
  for (int t : {1, 3, 5}) constant = std::max(constant, (magic_denoise(w, c, t).col(0).array() - 0.75).abs().maxCoeff());
  const double semigroup = (magic_denoise(w, magic_denoise(w, x, 2), 3) - magic_denoise(w, x, 5)).cwiseAbs().maxCoeff();
  return {identity && constant <= 1e-12 && semigroup <= 1e-10,
          fmt("t=0 identity %d, constant column drift %.3g (tol 1e-12), semigroup gap %.3g (tol 1e-10)", identity,
              constant, semigroup)};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "solver-oracle equivalence", oracle_equivalence},
      {2, "KKT suite", kkt_suite},
      {3, "sparsity behavior", sparsity},
      {4, "entropic contrast", entropic_contrast},
      {5, "eigen-spiral ordering", eigen_ordering},
      {6, "reference circle", reference_circle},
      {7, "SSL dominance", ssl_dominance},
      {8, "epsilon stability", epsilon_stability},
      {9, "LLGC stationarity", llgc_stationarity},
      {10, "gradient checks", gradient_checks},
      {11, "denoise invariants", denoise_invariants},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
