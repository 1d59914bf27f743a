#include <doctest.h>

#include <cmath>
#include <numbers>
#include <numeric>

#include "otgraph/errors.hpp"
#include "otgraph/graphs.hpp"
#include "otgraph/spectral.hpp"
#include "support.hpp"

using namespace otgraph;
using namespace otgraph::testing;

namespace {

constexpr double kPi = std::numbers::pi;

WeightedGraph cycle(Index n, double w = 1.0) {
  WeightedGraph g;
  g.n = n;
  for (Index i = 0; i + 1 < n; ++i) g.edges.push_back({i, i + 1, w});
  g.edges.push_back({0, n - 1, w});
  std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) {
    return std::tie(a.i, a.j) < std::tie(b.i, b.j);
  });
  return g;
}

Subspace axes(Index n, std::initializer_list<Index> idx) {
  DenseMatrix b = DenseMatrix::Zero(n, static_cast<Index>(idx.size()));
  Index c = 0;
  for (Index i : idx) b(i, c++) = 1.0;
  return Subspace::from_orthonormal(b);
}

}  // namespace

TEST_CASE("eigenmap of a connected graph excludes the constant eigenvector") {
  SeededRng rng(1);
  const WeightedGraph g = knn_gaussian(random_cloud(rng, 120, 3), 6, 0.5);
  REQUIRE(g.component_count() == 1);
  const Embedding e = eigenmap(g, 5);
  CHECK(e.top_eigenvalue == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.coords.cols() == 5);
  const Vector d = g.weighted_degrees();
  const DenseMatrix wbar(row_normalize(g).w);
  for (Index k = 0; k < 5; ++k) {
    const Vector v = e.coords.col(k);
    // D-orthogonal to constants, eigenvector of W_bar.
    CHECK(std::abs(d.dot(v)) <= 1e-10 * d.norm() * v.norm());
    CHECK((wbar * v - e.eigenvalues[k] * v).norm() <= 1e-6 * v.norm());
    CHECK(e.eigenvalues[k] < 1.0);
    if (k > 0) CHECK(e.eigenvalues[k] <= e.eigenvalues[k - 1]);
  }
}

TEST_CASE("cycle graph eigenmap lies on a circle") {
  for (Index n : {12, 50, 101}) {
    const Embedding e = eigenmap(cycle(n, 0.3), 2);
    CHECK(e.eigenvalues[0] == doctest::Approx(std::cos(2 * kPi / n)).epsilon(1e-10));
    CHECK(e.eigenvalues[1] == doctest::Approx(std::cos(2 * kPi / n)).epsilon(1e-10));
    const Vector r = e.coords.rowwise().norm();
    CHECK((r.array() - r.mean()).abs().maxCoeff() <= 1e-8 * r.mean());
    CHECK(radius_variation(e) <= 1e-8);
  }
}

TEST_CASE("eigenmap rejects disconnected graphs") {
  WeightedGraph g;
  g.n = 4;
  g.edges = {{0, 1, 1.0}, {2, 3, 1.0}};
  try {
    eigenmap(g, 1);
    FAIL("expected a graph error");
  } catch (const GraphError& e) {
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
  CHECK_THROWS_AS(eigenmap(cycle(5), 5), ParameterError);
}

TEST_CASE("eigenmap sign convention and relabeling") {
  SeededRng rng(2);
  const PointCloud pc = random_cloud(rng, 60, 3);
  const Embedding e = eigenmap(knn_gaussian(pc, 8, 1.0), 4);
  for (Index k = 0; k < 4; ++k) {
    Index arg = 0;
    e.coords.col(k).cwiseAbs().maxCoeff(&arg);
    CHECK(e.coords(arg, k) > 0.0);
  }
  // Reverse the node order.
  PointCloud rev = pc;
  for (Index i = 0; i < 60; ++i) rev.points.row(i) = pc.points.row(59 - i);
  const Embedding r = eigenmap(knn_gaussian(rev, 8, 1.0), 4);
  for (Index k = 0; k < 4; ++k) {
    CHECK(r.eigenvalues[k] == doctest::Approx(e.eigenvalues[k]).epsilon(1e-10));
    const Vector back = r.coords.col(k).reverse();
    const double same = (back - e.coords.col(k)).norm(), flipped = (back + e.coords.col(k)).norm();
    CHECK(std::min(same, flipped) <= 1e-8);
  }
}

TEST_CASE("principal angle examples") {
  const Subspace a = axes(6, {0, 2, 4});
  for (double t : principal_angles(a, a)) CHECK(t <= 1e-12);

  const Subspace comp = axes(6, {1, 3, 5});
  for (double t : principal_angles(a, comp)) CHECK(t == doctest::Approx(kPi / 2));

  DenseMatrix v(3, 1);
  v << 1, 1, 0;
  const auto angles = principal_angles(axes(3, {0}), Subspace::span_of(v));
  REQUIRE(angles.size() == 1);
  CHECK(angles[0] == doctest::Approx(kPi / 4).epsilon(1e-14));

  CHECK_THROWS_AS(principal_angles(axes(3, {0}), axes(4, {0})), ParameterError);
}

TEST_CASE("principal angles are symmetric, sorted and basis invariant") {
  SeededRng rng(3);
  DenseMatrix a(40, 5), b(40, 3);
  for (Index i = 0; i < 40; ++i) {
    for (Index j = 0; j < 5; ++j) a(i, j) = rng.gaussian();
    for (Index j = 0; j < 3; ++j) b(i, j) = rng.gaussian();
  }
  const Subspace sa = Subspace::span_of(a), sb = Subspace::span_of(b);
  const auto ab = principal_angles(sa, sb), ba = principal_angles(sb, sa);
  REQUIRE(ab.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(ab[k] == doctest::Approx(ba[k]).epsilon(1e-10));
    CHECK(ab[k] >= 0.0);
    CHECK(ab[k] <= kPi / 2);
    if (k > 0) CHECK(ab[k] >= ab[k - 1]);
  }
  const DenseMatrix rot = orthonormal_columns(rng, 5, 5);
  const auto rebased = principal_angles(Subspace::from_orthonormal(sa.basis() * rot), sb);
  for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(rebased[k] - ab[k]) <= 1e-8);
}

TEST_CASE("small principal angles keep full accuracy") {
  DenseMatrix v(2, 1);
  const double t = 1e-9;
  v << std::cos(t), std::sin(t);
  const auto a = principal_angles(axes(2, {0}), Subspace::from_orthonormal(v));
  CHECK(a[0] == doctest::Approx(t).epsilon(1e-6));
}

TEST_CASE("eigenspace error examples") {
  SeededRng rng(4);
  const WeightedGraph g = knn_gaussian(random_cloud(rng, 80, 3), 7, 0.8);
  CHECK(eigenspace_error(g, g, 10) <= 1e-10);
  const WeightedGraph h = knn_gaussian(random_cloud(rng, 80, 3), 7, 0.8);
  const double err = eigenspace_error(h, g, 10);
  CHECK(err >= 0.0);
  CHECK(err <= kPi / 2);
  CHECK(err > 0.01);

  const Subspace span = eigenspace(g, 10);
  const DenseMatrix rot = orthonormal_columns(rng, 10, 10);
  CHECK(eigenspace_error(g, Subspace::from_orthonormal(span.basis() * rot)) <= 1e-8);
}

TEST_CASE("reference graph of the closed spiral") {
  const PointCloud clean = closed_spiral(1000);
  const WeightedGraph ref = reference_graph(clean);
  const WeightedGraph direct = knn_gaussian(clean, 10, 0.025);
  REQUIRE(ref.edges.size() == direct.edges.size());
  for (std::size_t e = 0; e < ref.edges.size(); ++e) CHECK(ref.edges[e].w == direct.edges[e].w);
  CHECK(ref.component_count() == 1);
  CHECK(radius_variation(eigenmap(ref, 2)) <= 0.05);
}

TEST_CASE("subspace construction checks orthonormality") {
  DenseMatrix b(3, 2);
  b << 1, 1, 0, 1, 0, 0;
  CHECK_THROWS_AS(Subspace::from_orthonormal(b), ParameterError);
  const Subspace s = Subspace::span_of(b);
  CHECK((s.basis().transpose() * s.basis() - DenseMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);
}
