#pragma once

#include <string>
#include <vector>

#include "otgraph/cost.hpp"
#include "otgraph/numerics.hpp"

namespace otgraph {

enum class Regularizer { Quadratic, Entropic };

const char* to_string(Regularizer r);

/// Symmetric nonnegative coupling with unit row sums (up to solver tolerance).
/// Quadratic plans hold only their nonzero entries.
struct TransportPlan {
  SparseMatrix pi;
  Regularizer regularizer = Regularizer::Quadratic;
  double epsilon = 0.0;

  Index size() const noexcept { return pi.rows(); }
  Vector row_sums() const;
  /// ||pi 1 - 1||_inf
  double marginal_residual() const;
  /// Number of strictly positive entries with i != j.
  Index off_diagonal_nnz() const;
};

struct DualPotentials {
  Vector u;
};

struct QotConfig {
  double epsilon = 1.0;
  double delta = 1e-5;  // Tikhonov shift of the Newton system
  double theta = 0.1;   // Armijo sufficient-decrease fraction
  double kappa = 0.5;   // backtracking factor
  double marginal_tol = 1e-8;
  int max_newton = 500;
  int max_backtracks = 50;
  double cg_tol = 1e-10;
  int cg_max_iter = 0;  // 0 selects 10 * N

  void validate() const;
};

struct SolveDiagnostics {
  int newton_iterations = 0;
  double marginal_residual = 0.0;
  double duality_gap = 0.0;
  // phi[k] is the dual objective at the k-th iterate (phi[0] at the start).
  std::vector<double> phi;
  // Per accepted step: exact objective change, accepted step size,
  // directional derivative <grad phi, du>, CG iterations, backtracks.
  std::vector<double> phi_change;
  std::vector<double> step_sizes;
  std::vector<double> directional_derivative;
  std::vector<int> cg_iterations;
  std::vector<int> backtracks;
};

class QotSolveError : public ConvergenceError {
 public:
  enum class Kind { LineSearch, NewtonLimit, NonDescent };

  QotSolveError(Kind kind, const std::string& what, SolveDiagnostics diagnostics)
      : ConvergenceError(what, diagnostics.newton_iterations, diagnostics.marginal_residual),
        kind_(kind),
        diagnostics_(std::move(diagnostics)) {}

  Kind kind() const noexcept { return kind_; }
  const SolveDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  Kind kind_;
  SolveDiagnostics diagnostics_;
};

/// Phi(u) = (1/(2 eps)) sum_ij max{0, u_i + u_j - c_ij}^2 - 2 sum_i u_i, the
/// negated dual of the quadratically regularized problem with penalty
/// (eps/2) ||pi||^2. Minimizing Phi recovers the optimal plan.
double dual_objective(const Vector& u, const CostMatrix& c, double epsilon);

/// grad Phi(u) = 2 (pi(u) 1 - 1).
Vector dual_gradient(const Vector& u, const CostMatrix& c, double epsilon);

/// Phi(u + t du) - Phi(u), evaluated term by term so that the result stays
/// accurate when the change is far below the magnitude of Phi itself.
double dual_objective_change(const Vector& u, const Vector& du, double t, const CostMatrix& c,
                             double epsilon);

/// pi_ij = max{0, u_i + u_j - c_ij} / eps.
TransportPlan plan_from_duals(const Vector& u, const CostMatrix& c, double epsilon);

/// <c, pi> + (eps/2) ||pi||_F^2 over the stored entries of `plan`.
double quadratic_primal_objective(const TransportPlan& plan, const CostMatrix& c);

struct QotSolution {
  TransportPlan plan;
  DualPotentials duals;
  SolveDiagnostics diagnostics;
};

/// Semi-smooth Newton on Phi with Armijo backtracking. Each step solves
/// (sigma + diag(sigma 1) + delta I) du = -eps (pi 1 - 1) by CG, where sigma is
/// the indicator of u_i + u_j - c_ij >= 0. Starts from u = 1 unless `initial`
/// is given; stops when ||pi 1 - 1||_inf <= marginal_tol.
QotSolution solve_qot(const CostMatrix& c, const QotConfig& cfg, const Vector* initial = nullptr);

/// Euclidean projection of -c/eps onto {pi >= 0, pi = pi^T, pi 1 = 1} by
/// Dykstra's alternating projections (plus {diag = 0} when self mass is
/// disallowed). Iterates until no entry moves by more than `tol` over a sweep.
/// Intended for small N.
TransportPlan projection_oracle(const CostMatrix& c, double epsilon, double tol = 1e-13,
                                long max_iter = 20'000'000);

struct EntropicSolution {
  TransportPlan plan;
  DualPotentials duals;
  int iterations = 0;
  double marginal_residual = 0.0;
};

/// Symmetric Sinkhorn in the log domain: u <- (u + F(u)) / 2 with
/// F(u)_i = -eps log sum_j exp((u_j - c_ij) / eps), so that
/// pi_ij = exp((u_i + u_j - c_ij) / eps) has unit row sums at the fixed point.
EntropicSolution solve_entropic(const CostMatrix& c, double epsilon, double tol = 1e-9,
                                int max_iter = 100000);

}  // namespace otgraph
