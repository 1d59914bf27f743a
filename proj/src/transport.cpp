#include "otgraph/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace otgraph {

namespace {

inline double hinge(double x) { return x > 0.0 ? x : 0.0; }

void require_positive_epsilon(double epsilon, const char* where) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ParameterError(std::string(where) + ": epsilon must be positive and finite");
  }
}

void require_matching(const Vector& u, const CostMatrix& c, const char* where) {
  if (u.size() != c.size()) throw ParameterError(std::string(where) + ": potential length != N");
}

// Row sums of the hinge plan and the dual objective in one pass over the
// upper triangle.
struct DualEvaluation {
  Vector row_sums;
  double phi = 0.0;
};

DualEvaluation evaluate_dual(const Vector& u, const CostMatrix& c, double epsilon) {
  const Index n = c.size();
  const double inv_eps = 1.0 / epsilon;
  DualEvaluation ev;
  ev.row_sums = Vector::Zero(n);
  long double squares = 0.0L;
  for (Index j = 0; j < n; ++j) {
    const double* col = c.c.col(j).data();
    const double uj = u[j];
    long double col_squares = 0.0L;
    double col_sum = 0.0;
    for (Index i = 0; i < j; ++i) {
      const double h = hinge(u[i] + uj - col[i]);
      if (h > 0.0) {
        col_squares += static_cast<long double>(h) * h;
        col_sum += h;
        ev.row_sums[i] += h * inv_eps;
      }
    }
    const double hd = hinge(2.0 * uj - col[j]);
    ev.row_sums[j] += (col_sum + hd) * inv_eps;
    squares += 2.0L * col_squares + static_cast<long double>(hd) * hd;
  }
  ev.phi = static_cast<double>(squares * (0.5L * inv_eps) - 2.0L * static_cast<long double>(u.sum()));
  return ev;
}

}  // namespace

const char* to_string(Regularizer r) { return r == Regularizer::Quadratic ? "quadratic" : "entropic"; }

void CostMatrix::validate() const {
  const Index n = size();
  if (n < 1 || c.cols() != n) throw ParameterError("CostMatrix: must be square and non-empty");
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      const double v = c(i, j);
      if (i == j) {
        if (self_mass_allowed ? (v != 0.0) : !(v == std::numeric_limits<double>::infinity())) {
          throw ParameterError(self_mass_allowed ? "CostMatrix: diagonal must be zero"
                                                 : "CostMatrix: masked diagonal must be +inf");
        }
        continue;
      }
      if (!std::isfinite(v) || v < 0.0) throw ParameterError("CostMatrix: entries must be finite and >= 0");
      if (v != c(j, i)) throw ParameterError("CostMatrix: not symmetric");
    }
  }
}

CostMatrix CostMatrix::from_matrix(DenseMatrix m, bool self_mass_allowed) {
  CostMatrix cost;
  cost.c = std::move(m);
  cost.self_mass_allowed = self_mass_allowed;
  if (!self_mass_allowed) cost.c.diagonal().setConstant(std::numeric_limits<double>::infinity());
  cost.validate();
  return cost;
}

Vector TransportPlan::row_sums() const {
  Vector sums = Vector::Zero(pi.rows());
  for (Index k = 0; k < pi.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(pi, k); it; ++it) sums[it.row()] += it.value();
  }
  return sums;
}

double TransportPlan::marginal_residual() const {
  if (pi.rows() == 0) return 0.0;
  return (row_sums().array() - 1.0).abs().maxCoeff();
}

Index TransportPlan::off_diagonal_nnz() const {
  Index count = 0;
  for (Index k = 0; k < pi.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(pi, k); it; ++it) {
      if (it.row() != it.col() && it.value() > 0.0) ++count;
    }
  }
  return count;
}

void QotConfig::validate() const {
  require_positive_epsilon(epsilon, "QotConfig");
  if (!(delta > 0.0)) throw ParameterError("QotConfig: delta must be positive");
  if (!(theta > 0.0 && theta < 1.0)) throw ParameterError("QotConfig: theta must lie in (0, 1)");
  if (!(kappa > 0.0 && kappa < 1.0)) throw ParameterError("QotConfig: kappa must lie in (0, 1)");
  if (!(marginal_tol > 0.0)) throw ParameterError("QotConfig: marginal_tol must be positive");
  if (max_newton < 1 || max_backtracks < 1) throw ParameterError("QotConfig: iteration caps must be positive");
  if (!(cg_tol > 0.0)) throw ParameterError("QotConfig: cg_tol must be positive");
}

double dual_objective(const Vector& u, const CostMatrix& c, double epsilon) {
  require_positive_epsilon(epsilon, "dual_objective");
  require_matching(u, c, "dual_objective");
  return evaluate_dual(u, c, epsilon).phi;
}

Vector dual_gradient(const Vector& u, const CostMatrix& c, double epsilon) {
  require_positive_epsilon(epsilon, "dual_gradient");
  require_matching(u, c, "dual_gradient");
  return 2.0 * (evaluate_dual(u, c, epsilon).row_sums.array() - 1.0).matrix();
}

double dual_objective_change(const Vector& u, const Vector& du, double t, const CostMatrix& c,
                             double epsilon) {
  require_positive_epsilon(epsilon, "dual_objective_change");
  require_matching(u, c, "dual_objective_change");
  const Index n = c.size();
  long double acc = 0.0L;
  for (Index j = 0; j < n; ++j) {
    const double* col = c.c.col(j).data();
    long double col_acc = 0.0L;
    for (Index i = 0; i <= j; ++i) {
      const double base = u[i] + u[j] - col[i];
      const double a = hinge(base + t * (du[i] + du[j]));
      const double b = hinge(base);
      if (a == 0.0 && b == 0.0) continue;
      const long double term = static_cast<long double>(a - b) * (static_cast<long double>(a) + b);
      col_acc += i == j ? term : 2.0L * term;
    }
    acc += col_acc;
  }
  return static_cast<double>(acc / (2.0L * epsilon) - 2.0L * t * static_cast<long double>(du.sum()));
}

TransportPlan plan_from_duals(const Vector& u, const CostMatrix& c, double epsilon) {
  require_positive_epsilon(epsilon, "plan_from_duals");
  require_matching(u, c, "plan_from_duals");
  const Index n = c.size();
  TransportPlan plan;
  plan.regularizer = Regularizer::Quadratic;
  plan.epsilon = epsilon;
  plan.pi.resize(n, n);
  // Column-wise fill straight into compressed storage.
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(n);
  for (Index j = 0; j < n; ++j) {
    const double* col = c.c.col(j).data();
    for (Index i = 0; i < n; ++i) {
      if (u[i] + u[j] - col[i] > 0.0) ++counts[j];
    }
  }
  plan.pi.reserve(counts);
  for (Index j = 0; j < n; ++j) {
    const double* col = c.c.col(j).data();
    for (Index i = 0; i < n; ++i) {
      const double h = u[i] + u[j] - col[i];
      if (h > 0.0) plan.pi.insert(i, j) = h / epsilon;
    }
  }
  plan.pi.makeCompressed();
  return plan;
}

double quadratic_primal_objective(const TransportPlan& plan, const CostMatrix& c) {
  long double acc = 0.0L;
  for (Index k = 0; k < plan.pi.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(plan.pi, k); it; ++it) {
      const double v = it.value();
      if (v == 0.0) continue;
      acc += static_cast<long double>(c.c(it.row(), it.col())) * v + 0.5L * plan.epsilon * v * v;
    }
  }
  return static_cast<double>(acc);
}

namespace {

// sigma + diag(sigma 1) + delta I for the active set u_i + u_j - c_ij >= 0.
SparseMatrix newton_matrix(const Vector& u, const CostMatrix& c, double delta) {
  const Index n = c.size();
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(n);
  Vector active_degree = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    const double* col = c.c.col(j).data();
    int count = 0;
    for (Index i = 0; i < n; ++i) {
      if (u[i] + u[j] - col[i] >= 0.0) ++count;
    }
    active_degree[j] = count;
    counts[j] = count + 1;
  }
  SparseMatrix m(n, n);
  m.reserve(counts);
  for (Index j = 0; j < n; ++j) {
    const double* col = c.c.col(j).data();
    for (Index i = 0; i < n; ++i) {
      const bool active = u[i] + u[j] - col[i] >= 0.0;
      if (i == j) {
        m.insert(i, j) = (active ? 1.0 : 0.0) + active_degree[j] + delta;
      } else if (active) {
        m.insert(i, j) = 1.0;
      }
    }
  }
  m.makeCompressed();
  return m;
}

}  // namespace

QotSolution solve_qot(const CostMatrix& c, const QotConfig& cfg, const Vector* initial) {
  cfg.validate();
  const Index n = c.size();
  if (n < 1 || c.c.cols() != n) throw ParameterError("solve_qot: cost matrix must be square and non-empty");
  if (initial && initial->size() != n) throw ParameterError("solve_qot: initial potential length != N");
  const double eps = cfg.epsilon;

  Vector u = initial ? *initial : Vector::Ones(n);
  SolveDiagnostics diag;
  CgOptions cg;
  cg.tol = cfg.cg_tol;
  cg.max_iter = cfg.cg_max_iter;

  DualEvaluation ev = evaluate_dual(u, c, eps);
  diag.phi.push_back(ev.phi);
  for (;;) {
    const Vector marginal_error = (ev.row_sums.array() - 1.0).matrix();
    diag.marginal_residual = marginal_error.cwiseAbs().maxCoeff();
    if (diag.marginal_residual <= cfg.marginal_tol) break;
    if (diag.newton_iterations >= cfg.max_newton) {
      throw QotSolveError(QotSolveError::Kind::NewtonLimit,
                          "solve_qot: marginal residual " + std::to_string(diag.marginal_residual) +
                              " after " + std::to_string(cfg.max_newton) + " Newton steps",
                          diag);
    }

    const SparseSymmetricOperator system(newton_matrix(u, c, cfg.delta));
    const Vector rhs = -eps * marginal_error;
    CgResult step;
    try {
      step = cg_solve(system, rhs, cg);
    } catch (const ConvergenceError& e) {
      throw QotSolveError(QotSolveError::Kind::NonDescent,
                          std::string("solve_qot: Newton system solve failed: ") + e.what(), diag);
    }
    const Vector& du = step.x;
    const double d = 2.0 * marginal_error.dot(du);
    if (!(d < 0.0)) {
      throw QotSolveError(QotSolveError::Kind::NonDescent, "solve_qot: Newton direction is not a descent direction",
                          diag);
    }

    double t = 1.0;
    int backtracks = 0;
    double change = dual_objective_change(u, du, t, c, eps);
    while (change >= t * cfg.theta * d) {
      if (++backtracks > cfg.max_backtracks) {
        throw QotSolveError(QotSolveError::Kind::LineSearch,
                            "solve_qot: Armijo line search failed after " + std::to_string(cfg.max_backtracks) +
                                " backtracks",
                            diag);
      }
      t *= cfg.kappa;
      change = dual_objective_change(u, du, t, c, eps);
    }

    u.noalias() += t * du;
    ++diag.newton_iterations;
    diag.phi_change.push_back(change);
    diag.step_sizes.push_back(t);
    diag.directional_derivative.push_back(d);
    diag.cg_iterations.push_back(step.iterations);
    diag.backtracks.push_back(backtracks);
    ev = evaluate_dual(u, c, eps);
    diag.phi.push_back(ev.phi);
  }

  QotSolution sol;
  sol.plan = plan_from_duals(u, c, eps);
  sol.diagnostics = std::move(diag);
  sol.diagnostics.marginal_residual = sol.plan.marginal_residual();
  sol.diagnostics.duality_gap = quadratic_primal_objective(sol.plan, c) + sol.diagnostics.phi.back();
  sol.duals.u = std::move(u);
  return sol;
}

TransportPlan projection_oracle(const CostMatrix& c, double epsilon, double tol, long max_iter) {
  require_positive_epsilon(epsilon, "projection_oracle");
  const Index n = c.size();
  if (n < 1 || c.c.cols() != n) throw ParameterError("projection_oracle: cost matrix must be square and non-empty");
  const bool mask_diagonal = !c.self_mass_allowed;

  DenseMatrix target = -c.c / epsilon;
  if (mask_diagonal) target.diagonal().setZero();  // fixed to zero by the third set

  // Projection onto {X = X^T, X 1 = 1}: symmetrize, then add a 1^T + 1 a^T
  // with N a + (1^T a) 1 = 1 - S 1.
  auto project_affine = [n](const DenseMatrix& y) {
    DenseMatrix s = 0.5 * (y + y.transpose());
    const Vector r = Vector::Ones(n) - s.rowwise().sum();
    const double total = r.sum() / (2.0 * static_cast<double>(n));
    const Vector a = (r.array() - total).matrix() / static_cast<double>(n);
    s.colwise() += a;
    s.rowwise() += a.transpose();
    return s;
  };

  DenseMatrix x = target;
  DenseMatrix inc_affine = DenseMatrix::Zero(n, n);
  DenseMatrix inc_clip = DenseMatrix::Zero(n, n);
  DenseMatrix inc_diag = DenseMatrix::Zero(n, n);
  for (long it = 0; it < max_iter; ++it) {
    const DenseMatrix y = project_affine(x + inc_affine);
    inc_affine = x + inc_affine - y;
    DenseMatrix z = (y + inc_clip).cwiseMax(0.0);
    inc_clip = y + inc_clip - z;
    DenseMatrix next = z;
    if (mask_diagonal) {
      next = z + inc_diag;
      next.diagonal().setZero();
      inc_diag = z + inc_diag - next;
    }
    const double movement = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    if (movement <= tol && it > 0) {
      const DenseMatrix sym = 0.5 * (x + x.transpose());
      TransportPlan plan;
      plan.regularizer = Regularizer::Quadratic;
      plan.epsilon = epsilon;
      plan.pi = sym.sparseView(0.0, 0.0);
      plan.pi.prune([](Index, Index, double v) { return v > 0.0; });
      plan.pi.makeCompressed();
      return plan;
    }
  }
  throw ConvergenceError("projection_oracle: Dykstra iteration cap reached", static_cast<int>(std::min<long>(max_iter, std::numeric_limits<int>::max())), 0.0);
}

EntropicSolution solve_entropic(const CostMatrix& c, double epsilon, double tol, int max_iter) {
  require_positive_epsilon(epsilon, "solve_entropic");
  if (!(tol > 0.0)) throw ParameterError("solve_entropic: tol must be positive");
  const Index n = c.size();
  if (n < 1 || c.c.cols() != n) throw ParameterError("solve_entropic: cost matrix must be square and non-empty");

  Vector u = Vector::Zero(n);
  Vector f(n);
  Vector scratch(n);
  auto apply_f = [&]() {
    // f_i = -eps * logsumexp_j((u_j - c_ij) / eps), column i of the symmetric cost
    double residual = 0.0;
    for (Index i = 0; i < n; ++i) {
      const double* col = c.c.col(i).data();
      double peak = -std::numeric_limits<double>::infinity();
      for (Index j = 0; j < n; ++j) {
        scratch[j] = (u[j] - col[j]) / epsilon;
        peak = std::max(peak, scratch[j]);
      }
      double sum = 0.0;
      for (Index j = 0; j < n; ++j) sum += std::exp(scratch[j] - peak);
      f[i] = -epsilon * (peak + std::log(sum));
      // row sum of pi at the current u is exp((u_i - f_i) / eps)
      residual = std::max(residual, std::abs(std::expm1((u[i] - f[i]) / epsilon)));
    }
    return residual;
  };

  EntropicSolution sol;
  for (int it = 0;; ++it) {
    const double residual = apply_f();
    sol.marginal_residual = residual;
    sol.iterations = it;
    if (residual <= tol) break;
    if (it >= max_iter) {
      throw ConvergenceError("solve_entropic: marginal residual " + std::to_string(residual) + " after " +
                                 std::to_string(max_iter) + " iterations",
                             it, residual);
    }
    u = 0.5 * (u + f);
  }

  DenseMatrix pi(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) pi(i, j) = std::exp((u[i] + u[j] - c.c(i, j)) / epsilon);
  }
  sol.plan.regularizer = Regularizer::Entropic;
  sol.plan.epsilon = epsilon;
  sol.plan.pi = pi.sparseView(0.0, 0.0);
  sol.plan.pi.makeCompressed();
  sol.marginal_residual = sol.plan.marginal_residual();
  sol.duals.u = std::move(u);
  return sol;
}

}  // namespace otgraph
