#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "otgraph/errors.hpp"
#include "otgraph/numerics.hpp"

using namespace otgraph;

namespace {

// Gaussian elimination with partial pivoting on plain arrays.
std::vector<double> gauss_solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return x;
}

DenseMatrix random_spd(SeededRng& rng, Index n) {
  DenseMatrix m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = rng.gaussian();
  }
  return m * m.transpose() + DenseMatrix::Identity(n, n);
}

Vector random_vector(SeededRng& rng, Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.gaussian();
  return v;
}

}  // namespace

TEST_CASE("rng streams are reproducible") {
  SeededRng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs = differs || x != c.next_u64();
  }
  CHECK(differs);
}

TEST_CASE("rng engine matches the standard mt19937_64 stream") {
  // First output for the standard default seed 5489.
  SeededRng rng(5489);
  CHECK(rng.next_u64() == 14514284786278117030ULL);
}

TEST_CASE("rng uniform and below stay in range") {
  SeededRng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.below(7) < 7);
  }
}

TEST_CASE("rng gaussian has unit variance") {
  SeededRng rng(11);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    sum += g;
    sq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("derived streams differ by index and repeat by seed") {
  SeededRng a = SeededRng::derive(1, 0), b = SeededRng::derive(1, 1), c = SeededRng::derive(1, 0);
  const auto x = a.next_u64();
  CHECK(x != b.next_u64());
  CHECK(x == c.next_u64());
}

TEST_CASE("cg_solve identity and diagonal examples") {
  Vector b(4);
  b << 1, 2, 3, 4;
  const DenseSymmetricOperator eye(DenseMatrix::Identity(4, 4));
  CHECK((cg_solve(eye, b).x - b).norm() < 1e-14);

  Vector b3(3);
  b3 << 2, 4, 6;
  const DenseSymmetricOperator two(2.0 * DenseMatrix::Identity(3, 3));
  const Vector x = cg_solve(two, b3).x;
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(x[2] == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("cg_solve matches a direct elimination solve") {
  SeededRng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const DenseMatrix a = random_spd(rng, 5);
    const Vector b = random_vector(rng, 5);
    std::vector<std::vector<double>> rows(5, std::vector<double>(5));
    std::vector<double> rhs(5);
    for (Index i = 0; i < 5; ++i) {
      rhs[i] = b[i];
      for (Index j = 0; j < 5; ++j) rows[i][j] = a(i, j);
    }
    const auto direct = gauss_solve(rows, rhs);
    const CgResult r = cg_solve(DenseSymmetricOperator(a), b);
    for (Index i = 0; i < 5; ++i) CHECK(std::abs(r.x[i] - direct[i]) <= 1e-8);
    CHECK(r.relative_residual <= 1e-10);
  }
}

TEST_CASE("cg_solve error decreases in the A-norm") {
  SeededRng rng(5);
  const DenseMatrix a = random_spd(rng, 30);
  const Vector b = random_vector(rng, 30);
  const Vector exact = a.llt().solve(b);
  std::vector<double> errors;
  CgOptions opt;
  opt.on_iterate = [&](const Vector& x) {
    const Vector e = x - exact;
    errors.push_back(std::sqrt(e.dot(a * e)));
  };
  cg_solve(DenseSymmetricOperator(a), b, opt);
  REQUIRE(errors.size() > 2);
  for (std::size_t k = 1; k < errors.size(); ++k) CHECK(errors[k] <= errors[k - 1] * (1 + 1e-12) + 1e-14);
}

TEST_CASE("cg_solve reports non-convergence") {
  SeededRng rng(9);
  const DenseMatrix a = random_spd(rng, 20);
  const Vector b = random_vector(rng, 20);
  CgOptions opt;
  opt.max_iter = 2;
  CHECK_THROWS_AS(cg_solve(DenseSymmetricOperator(a), b, opt), ConvergenceError);
}

TEST_CASE("symmetric operators are self-adjoint") {
  SeededRng rng(13);
  const DenseMatrix a = random_spd(rng, 12);
  const DenseSymmetricOperator dense(a);
  const SparseSymmetricOperator sparse(a.sparseView());
  for (int t = 0; t < 10; ++t) {
    const Vector v = random_vector(rng, 12), w = random_vector(rng, 12);
    for (const SymmetricOperator* op : {static_cast<const SymmetricOperator*>(&dense),
                                        static_cast<const SymmetricOperator*>(&sparse)}) {
      const double lhs = (*op * v).dot(w), rhs = v.dot(*op * w);
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
    }
  }
}

TEST_CASE("sym_eigs identity, diagonal and 2x2 examples") {
  const EigenPairs id = sym_eigs(DenseMatrix::Identity(4, 4), 2);
  REQUIRE(id.values.size() == 2);
  CHECK(id.values[0] == doctest::Approx(1.0));
  CHECK(id.values[1] == doctest::Approx(1.0));

  DenseMatrix d = DenseMatrix::Zero(3, 3);
  d.diagonal() << 3, 1, 2;
  const EigenPairs de = sym_eigs(d, 3);
  CHECK(de.values[0] == doctest::Approx(3.0));
  CHECK(de.values[1] == doctest::Approx(2.0));
  CHECK(de.values[2] == doctest::Approx(1.0));

  DenseMatrix swap(2, 2);
  swap << 0, 1, 1, 0;
  const EigenPairs s = sym_eigs(swap, 2);
  CHECK(s.values[0] == doctest::Approx(1.0));
  CHECK(s.values[1] == doctest::Approx(-1.0));
  const double h = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(std::abs(s.vectors(0, 0)) - h) < 1e-12);
  CHECK(s.vectors(0, 0) * s.vectors(1, 0) > 0.0);
  CHECK(std::abs(std::abs(s.vectors(0, 1)) - h) < 1e-12);
  CHECK(s.vectors(0, 1) * s.vectors(1, 1) < 0.0);
}

TEST_CASE("sym_eigs residuals and orthonormality on a larger matrix") {
  SeededRng rng(17);
  const Index n = 300;
  DenseMatrix a(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) a(i, j) = a(j, i) = rng.gaussian();
  }
  const EigenPairs e = sym_eigs(a, 12);
  const double norm = a.operatorNorm();
  for (Index k = 0; k < 12; ++k) {
    CHECK((a * e.vectors.col(k) - e.values[k] * e.vectors.col(k)).norm() <= 1e-8 * norm);
    if (k > 0) CHECK(e.values[k] <= e.values[k - 1]);
  }
  CHECK((e.vectors.transpose() * e.vectors - DenseMatrix::Identity(12, 12)).cwiseAbs().maxCoeff() <= 1e-10);
  // Top eigenvalue agrees with a full decomposition.
  Eigen::SelfAdjointEigenSolver<DenseMatrix> full(a);
  CHECK(e.values[0] == doctest::Approx(full.eigenvalues()[n - 1]).epsilon(1e-10));
}

TEST_CASE("sym_eigs rejects m > n") {
  CHECK_THROWS_AS(sym_eigs(DenseMatrix::Identity(3, 3), 4), ParameterError);
  CHECK_THROWS_AS(sym_eigs(DenseMatrix::Identity(3, 3), 0), ParameterError);
}

TEST_CASE("sym_eigs through a sparse operator") {
  SparseMatrix s(3, 3);
  s.insert(0, 0) = 3;
  s.insert(1, 1) = 1;
  s.insert(2, 2) = 2;
  const EigenPairs e = sym_eigs(SparseSymmetricOperator(s), 2);
  CHECK(e.values[0] == doctest::Approx(3.0));
  CHECK(e.values[1] == doctest::Approx(2.0));
}

TEST_CASE("orthonormal_columns examples") {
  SeededRng rng(1);
  const DenseMatrix r = orthonormal_columns(rng, 100, 3);
  CHECK(r.rows() == 100);
  CHECK(r.cols() == 3);
  CHECK((r.transpose() * r - DenseMatrix::Identity(3, 3)).cwiseAbs().maxCoeff() <= 1e-12);

  const DenseMatrix q = orthonormal_columns(rng, 3, 3);
  for (int t = 0; t < 20; ++t) {
    const Vector x = random_vector(rng, 3);
    CHECK(std::abs((q * x).norm() - x.norm()) <= 1e-10 * x.norm());
  }

  SeededRng a(99), b(99);
  CHECK(orthonormal_columns(a, 10, 4) == orthonormal_columns(b, 10, 4));
  CHECK_THROWS_AS(orthonormal_columns(a, 2, 3), ParameterError);
}

TEST_CASE("logspace endpoints") {
  const auto v = logspace(-1.5, 1.5, 12);
  REQUIRE(v.size() == 12);
  CHECK(v.front() == doctest::Approx(std::pow(10.0, -1.5)));
  CHECK(v.back() == doctest::Approx(std::pow(10.0, 1.5)));
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] > v[i - 1]);
}
