#pragma once

// Helpers shared by the unit tests and the acceptance suite.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "otgraph/datasets.hpp"
#include "otgraph/transport.hpp"

namespace otgraph::testing {

inline PointCloud random_cloud(SeededRng& rng, Index n, Index d) {
  PointCloud pc;
  pc.points.resize(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) pc.points(i, j) = rng.gaussian();
  }
  return normalize_scale(pc);
}

inline DenseMatrix dense(const TransportPlan& plan) { return DenseMatrix(plan.pi); }

// max over positive entries of |eps pi_ij - (u_i + u_j - c_ij)|
inline double complementary_slackness(const TransportPlan& plan, const Vector& u, const CostMatrix& c,
                                      double epsilon) {
  double worst = 0.0;
  for (Index k = 0; k < plan.pi.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(plan.pi, k); it; ++it) {
      if (it.value() <= 0.0) continue;
      const Index i = it.row(), j = it.col();
      worst = std::max(worst, std::abs(epsilon * it.value() - (u[i] + u[j] - c.c(i, j))));
    }
  }
  return worst;
}

inline bool exactly_symmetric(const SparseMatrix& m) {
  const DenseMatrix d(m);
  return d == d.transpose();
}

// (P + P^T) / 2 for a random permutation P: symmetric and doubly stochastic.
inline DenseMatrix random_symmetric_doubly_stochastic(SeededRng& rng, Index n) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = n - 1; i > 0; --i) {
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(i + 1)))]);
  }
  DenseMatrix q = DenseMatrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    q(i, perm[static_cast<std::size_t>(i)]) += 0.5;
    q(perm[static_cast<std::size_t>(i)], i) += 0.5;
  }
  return q;
}

inline double quadratic_objective(const DenseMatrix& pi, const CostMatrix& c, double epsilon) {
  double s = 0.0;
  for (Index j = 0; j < pi.cols(); ++j) {
    for (Index i = 0; i < pi.rows(); ++i) {
      if (pi(i, j) != 0.0) s += pi(i, j) * c.c(i, j);
    }
  }
  return s + 0.5 * epsilon * pi.squaredNorm();
}

// Random dual vector whose hinge arguments u_i + u_j - c_ij all stay at least
// `margin` away from zero, so central differences never straddle a kink.
inline Vector kink_free_duals(SeededRng& rng, const CostMatrix& c, double scale, double margin) {
  const Index n = c.size();
  for (int attempt = 0; attempt < 100000; ++attempt) {
    Vector u(n);
    for (Index i = 0; i < n; ++i) u[i] = scale * rng.uniform(0.0, 1.0);
    bool ok = true;
    for (Index i = 0; i < n && ok; ++i) {
      for (Index j = 0; j < n && ok; ++j) {
        const double a = u[i] + u[j] - c.c(i, j);
        if (std::isfinite(a) && std::abs(a) < margin) ok = false;
      }
    }
    if (ok) return u;
  }
  return Vector::Zero(n);
}

// Relative error ||fd - grad|| / ||grad|| with central differences of step h.
inline double gradient_check(const Vector& u, const CostMatrix& c, double epsilon, double h) {
  const Vector g = dual_gradient(u, c, epsilon);
  Vector fd(u.size());
  for (Index i = 0; i < u.size(); ++i) {
    Vector up = u, dn = u;
    up[i] += h;
    dn[i] -= h;
    fd[i] = (dual_objective(up, c, epsilon) - dual_objective(dn, c, epsilon)) / (2 * h);
  }
  return (fd - g).norm() / std::max(g.norm(), 1e-300);
}

}  // namespace otgraph::testing
