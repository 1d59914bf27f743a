#include "otgraph/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace otgraph {

Subspace Subspace::span_of(const DenseMatrix& spanning) {
  if (spanning.cols() < 1 || spanning.rows() < spanning.cols()) {
    throw ParameterError("Subspace: need 1 <= columns <= rows");
  }
  return Subspace(orthonormalize(spanning));
}

Subspace Subspace::from_orthonormal(DenseMatrix basis) {
  const Index m = basis.cols();
  if (m < 1) throw ParameterError("Subspace: empty basis");
  const double err = (basis.transpose() * basis - DenseMatrix::Identity(m, m)).cwiseAbs().maxCoeff();
  if (err > 1e-10) throw ParameterError("Subspace: basis is not orthonormal");
  return Subspace(std::move(basis));
}

Embedding eigenmap(const WeightedGraph& g, Index ell) {
  const Index n = g.n;
  if (ell < 1 || ell > n - 1) {
    throw ParameterError("eigenmap: need 1 <= ell <= N-1, got ell=" + std::to_string(ell));
  }
  const Vector deg = g.weighted_degrees();
  for (Index i = 0; i < n; ++i) {
    if (!(deg[i] > 0.0)) throw GraphError("eigenmap: node " + std::to_string(i) + " is isolated");
  }
  if (const int comps = g.component_count(); comps > 1) {
    throw GraphError("eigenmap: graph has " + std::to_string(comps) + " connected components");
  }

  const Vector inv_sqrt = deg.array().rsqrt();
  DenseMatrix a = DenseMatrix::Zero(n, n);
  for (const Edge& e : g.edges) {
    const double v = e.w * inv_sqrt[e.i] * inv_sqrt[e.j];
    a(e.i, e.j) = v;
    a(e.j, e.i) = v;
  }
  for (std::size_t i = 0; i < g.self_weights.size(); ++i) {
    const auto k = static_cast<Index>(i);
    a(k, k) = g.self_weights[i] * inv_sqrt[k] * inv_sqrt[k];
  }

  const EigenPairs pairs = sym_eigs(a, ell + 1);
  Embedding emb;
  emb.top_eigenvalue = pairs.values[0];
  emb.eigenvalues = pairs.values.tail(ell);
  emb.coords.resize(n, ell);
  for (Index k = 0; k < ell; ++k) {
    Vector v = inv_sqrt.cwiseProduct(pairs.vectors.col(k + 1));
    v.normalize();
    Index lead = 0;
    for (Index i = 1; i < n; ++i) {
      if (std::abs(v[i]) > std::abs(v[lead])) lead = i;
    }
    if (v[lead] < 0.0) v = -v;
    emb.coords.col(k) = v;
  }
  return emb;
}

std::vector<double> principal_angles(const Subspace& a, const Subspace& b) {
  if (a.ambient() != b.ambient()) {
    throw ParameterError("principal_angles: subspaces live in different dimensions (" +
                         std::to_string(a.ambient()) + " vs " + std::to_string(b.ambient()) + ")");
  }
  // Arrange so that the second subspace has the smaller dimension.
  const DenseMatrix& big = a.dim() >= b.dim() ? a.basis() : b.basis();
  const DenseMatrix& small = a.dim() >= b.dim() ? b.basis() : a.basis();
  const Index m = small.cols();

  const DenseMatrix cross = big.transpose() * small;
  Eigen::JacobiSVD<DenseMatrix> cos_svd(cross);
  Vector cosines = cos_svd.singularValues();  // descending
  const DenseMatrix residual = small - big * cross;
  Eigen::JacobiSVD<DenseMatrix> sin_svd(residual);
  Vector sines = sin_svd.singularValues();  // descending
  std::sort(sines.data(), sines.data() + sines.size());

  std::vector<double> angles(static_cast<std::size_t>(m));
  for (Index k = 0; k < m; ++k) {
    const double c = std::clamp(cosines[k], 0.0, 1.0);
    const double s = std::clamp(sines[k], 0.0, 1.0);
    angles[static_cast<std::size_t>(k)] = c * c >= 0.5 ? std::asin(s) : std::acos(c);
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

Subspace eigenspace(const WeightedGraph& g, Index m) { return Subspace::span_of(eigenmap(g, m).coords); }

double eigenspace_error(const WeightedGraph& test, const Subspace& reference_span) {
  const Subspace span = eigenspace(test, reference_span.dim());
  const auto angles = principal_angles(span, reference_span);
  return std::accumulate(angles.begin(), angles.end(), 0.0) / static_cast<double>(angles.size());
}

double eigenspace_error(const WeightedGraph& test, const WeightedGraph& reference, Index m) {
  if (test.n != reference.n) throw ParameterError("eigenspace_error: graphs have different node counts");
  return eigenspace_error(test, eigenspace(reference, m));
}

WeightedGraph reference_graph(const PointCloud& pc_clean) { return knn_gaussian(pc_clean, 10, 0.025); }

double radius_variation(const Embedding& e) {
  if (e.coords.cols() < 2) throw ParameterError("radius_variation: need at least 2 embedding coordinates");
  const Vector r = e.coords.leftCols(2).rowwise().norm();
  const double mean = r.mean();
  const double var = (r.array() - mean).square().mean();
  return std::sqrt(var) / mean;
}

}  // namespace otgraph
