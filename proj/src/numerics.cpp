#include "otgraph/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <lapacke.h>

namespace otgraph {

std::uint64_t SeededRng::below(std::uint64_t n) {
  if (n == 0) throw ParameterError("SeededRng::below: n must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double SeededRng::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

SeededRng SeededRng::derive(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over (seed, index)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return SeededRng(z);
}

DenseMatrix SymmetricOperator::to_dense() const {
  const Index n = dimension();
  DenseMatrix out(n, n);
  Vector e = Vector::Zero(n);
  Vector col(n);
  for (Index j = 0; j < n; ++j) {
    e[j] = 1.0;
    apply(e, col);
    out.col(j) = col;
    e[j] = 0.0;
  }
  return out;
}

DenseSymmetricOperator::DenseSymmetricOperator(DenseMatrix a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols()) throw ParameterError("DenseSymmetricOperator: matrix not square");
}

SparseSymmetricOperator::SparseSymmetricOperator(SparseMatrix a) : a_(std::move(a)) {
  if (a_.rows() != a_.cols()) throw ParameterError("SparseSymmetricOperator: matrix not square");
  a_.makeCompressed();
}

CgResult cg_solve(const SymmetricOperator& a, const Vector& b, const CgOptions& options) {
  const Index n = a.dimension();
  if (b.size() != n) throw ParameterError("cg_solve: right-hand side has wrong length");
  if (!(options.tol > 0.0)) throw ParameterError("cg_solve: tol must be positive");
  const int max_iter = options.max_iter > 0 ? options.max_iter : static_cast<int>(10 * std::max<Index>(n, 1));

  CgResult result;
  result.x = Vector::Zero(n);
  if (options.on_iterate) options.on_iterate(result.x);

  const double b_norm = b.norm();
  if (b_norm == 0.0) return result;
  const double target = options.tol * b_norm;

  Vector r = b;
  Vector p = r;
  Vector ap(n);
  double rr = r.squaredNorm();
  for (int it = 1; it <= max_iter; ++it) {
    a.apply(p, ap);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) {
      throw ConvergenceError("cg_solve: operator is not positive definite along a search direction",
                             it, std::sqrt(rr) / b_norm);
    }
    const double alpha = rr / pap;
    result.x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    const double rr_next = r.squaredNorm();
    result.iterations = it;
    if (options.on_iterate) options.on_iterate(result.x);
    if (std::sqrt(rr_next) <= target) {
      // Guard against drift in the recursively updated residual.
      Vector true_r(n);
      a.apply(result.x, true_r);
      true_r = b - true_r;
      const double true_norm = true_r.norm();
      if (true_norm <= target) {
        result.relative_residual = true_norm / b_norm;
        return result;
      }
      r = true_r;
      p = r;
      rr = r.squaredNorm();
      continue;
    }
    p = r + (rr_next / rr) * p;
    rr = rr_next;
  }
  throw ConvergenceError("cg_solve: no convergence after " + std::to_string(max_iter) + " iterations",
                         max_iter, std::sqrt(rr) / b_norm);
}

EigenPairs sym_eigs(const DenseMatrix& a, Index m) {
  const Index n = a.rows();
  if (a.cols() != n) throw ParameterError("sym_eigs: matrix not square");
  if (m < 1 || m > n) {
    throw ParameterError("sym_eigs: requested " + std::to_string(m) + " eigenpairs of a " +
                         std::to_string(n) + "x" + std::to_string(n) + " operator");
  }
  DenseMatrix work = a;  // dsyevr overwrites its input
  Vector w(n);
  DenseMatrix z(n, m);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(m));
  lapack_int found = 0;
  const auto nn = static_cast<lapack_int>(n);
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', nn, work.data(), nn, 0.0, 0.0,
                     static_cast<lapack_int>(n - m + 1), nn, 0.0, &found, w.data(), z.data(), nn,
                     support.data());
  if (info != 0 || found != m) {
    throw ConvergenceError("sym_eigs: LAPACK dsyevr failed (info=" + std::to_string(info) + ")", 0,
                           0.0);
  }
  EigenPairs out;
  out.values.resize(m);
  out.vectors.resize(n, m);
  for (Index k = 0; k < m; ++k) {
    out.values[k] = w[m - 1 - k];
    out.vectors.col(k) = z.col(m - 1 - k);
  }

  // A faulty BLAS build shows up as large residuals; redo the solve in Eigen.
  const double scale = std::max(a.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const double residual = (a * out.vectors - out.vectors * out.values.asDiagonal()).colwise().norm().maxCoeff();
  if (!(residual <= 1e-9 * scale * std::sqrt(static_cast<double>(n)))) {
    Eigen::SelfAdjointEigenSolver<DenseMatrix> full(a);
    if (full.info() != Eigen::Success) throw ConvergenceError("sym_eigs: eigensolver failed", 0, residual);
    for (Index k = 0; k < m; ++k) {
      out.values[k] = full.eigenvalues()[n - 1 - k];
      out.vectors.col(k) = full.eigenvectors().col(n - 1 - k);
    }
  }
  return out;
}

EigenPairs sym_eigs(const SymmetricOperator& a, Index m) {
  if (const auto* dense = dynamic_cast<const DenseSymmetricOperator*>(&a)) {
    return sym_eigs(dense->matrix(), m);
  }
  return sym_eigs(a.to_dense(), m);
}

DenseMatrix orthonormalize(const DenseMatrix& m) {
  Eigen::HouseholderQR<DenseMatrix> qr(m);
  DenseMatrix q = qr.householderQ() * DenseMatrix::Identity(m.rows(), m.cols());
  // Fix column signs so that R has a nonnegative diagonal.
  const DenseMatrix& r = qr.matrixQR();
  for (Index j = 0; j < m.cols(); ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

DenseMatrix orthonormal_columns(SeededRng& rng, Index ambient, Index intrinsic) {
  if (intrinsic < 1 || ambient < intrinsic) {
    throw ParameterError("orthonormal_columns: need 1 <= intrinsic <= ambient, got intrinsic=" +
                         std::to_string(intrinsic) + ", ambient=" + std::to_string(ambient));
  }
  DenseMatrix g(ambient, intrinsic);
  for (Index i = 0; i < ambient; ++i) {
    for (Index j = 0; j < intrinsic; ++j) g(i, j) = rng.gaussian();
  }
  return orthonormalize(g);
}

std::vector<double> logspace(double lo, double hi, int count) {
  if (count < 1) throw ParameterError("logspace: count must be positive");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double e = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (count - 1);
    out[static_cast<std::size_t>(i)] = std::pow(10.0, e);
  }
  return out;
}

}  // namespace otgraph
