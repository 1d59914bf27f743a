#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "otgraph/errors.hpp"

namespace otgraph {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Portable seeded random stream.
///
/// The raw stream is std::mt19937_64, whose output sequence is fixed by the
/// C++ standard. Uniform doubles take the top 53 bits of each draw. Gaussians
/// use the Box-Muller transform on two uniforms, returning the
/// cosine branch first and caching the sine branch for the next call. None of
/// the <random> distributions are used since their output is
/// implementation-defined.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), rejection sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n);

  double gaussian();

  /// Child stream for the cell `index` of a computation seeded with this seed.
  static SeededRng derive(std::uint64_t seed, std::uint64_t index);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Symmetric linear map given only through its action on vectors.
class SymmetricOperator {
 public:
  virtual ~SymmetricOperator() = default;
  virtual Index dimension() const = 0;
  virtual void apply(const Vector& v, Vector& out) const = 0;

  /// Materialized matrix; the default probes with unit vectors.
  virtual DenseMatrix to_dense() const;

  Vector operator*(const Vector& v) const {
    Vector out(dimension());
    apply(v, out);
    return out;
  }
};

class DenseSymmetricOperator final : public SymmetricOperator {
 public:
  explicit DenseSymmetricOperator(DenseMatrix a);
  Index dimension() const override { return a_.rows(); }
  void apply(const Vector& v, Vector& out) const override { out.noalias() = a_ * v; }
  DenseMatrix to_dense() const override { return a_; }
  const DenseMatrix& matrix() const noexcept { return a_; }

 private:
  DenseMatrix a_;
};

class SparseSymmetricOperator final : public SymmetricOperator {
 public:
  explicit SparseSymmetricOperator(SparseMatrix a);
  Index dimension() const override { return a_.rows(); }
  void apply(const Vector& v, Vector& out) const override { out.noalias() = a_ * v; }
  DenseMatrix to_dense() const override { return DenseMatrix(a_); }
  const SparseMatrix& matrix() const noexcept { return a_; }

 private:
  SparseMatrix a_;
};

struct CgOptions {
  double tol = 1e-10;
  int max_iter = 0;  // 0 selects 10 * n
  // Called with every iterate x_k, starting from the initial guess.
  std::function<void(const Vector&)> on_iterate;
};

struct CgResult {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conjugate gradients for a symmetric positive definite operator, started
/// from zero. Stops once ||Ax - b|| <= tol * ||b||; throws ConvergenceError
/// carrying the last relative residual otherwise.
CgResult cg_solve(const SymmetricOperator& a, const Vector& b, const CgOptions& options = {});

struct EigenPairs {
  Vector values;        // descending
  DenseMatrix vectors;  // orthonormal columns, matching `values`
};

/// The m algebraically largest eigenpairs of a symmetric operator.
EigenPairs sym_eigs(const SymmetricOperator& a, Index m);
EigenPairs sym_eigs(const DenseMatrix& a, Index m);

/// Haar-distributed ambient x intrinsic matrix with orthonormal columns
/// (sign-corrected thin QR of a Gaussian matrix).
DenseMatrix orthonormal_columns(SeededRng& rng, Index ambient, Index intrinsic);

/// Thin orthonormal basis for the column span of `m` (Householder QR).
DenseMatrix orthonormalize(const DenseMatrix& m);

/// `count` points logarithmically spaced from 10^lo to 10^hi inclusive.
std::vector<double> logspace(double lo, double hi, int count);

}  // namespace otgraph
