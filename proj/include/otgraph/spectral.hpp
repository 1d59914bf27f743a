#pragma once

#include <vector>

#include "otgraph/datasets.hpp"
#include "otgraph/graphs.hpp"
#include "otgraph/numerics.hpp"

namespace otgraph {

/// Eigenmap coordinates: column k holds the eigenvector of W_bar for the
/// (k+2)-th largest eigenvalue, unit Euclidean norm, with its first
/// largest-magnitude entry positive.
struct Embedding {
  DenseMatrix coords;  // N x ell
  Vector eigenvalues;  // ell values, descending
  double top_eigenvalue = 1.0;
};

/// Orthonormal basis of a linear subspace.
class Subspace {
 public:
  /// Orthonormalizes the columns of `spanning`.
  static Subspace span_of(const DenseMatrix& spanning);
  /// Wraps a basis that is already orthonormal (checked to 1e-10).
  static Subspace from_orthonormal(DenseMatrix basis);

  const DenseMatrix& basis() const noexcept { return basis_; }
  Index ambient() const noexcept { return basis_.rows(); }
  Index dim() const noexcept { return basis_.cols(); }

 private:
  explicit Subspace(DenseMatrix basis) : basis_(std::move(basis)) {}
  DenseMatrix basis_;
};

/// Top nontrivial eigenvectors of the random-walk operator of `g`, computed
/// through the symmetric conjugate D^-1/2 W D^-1/2. Throws GraphError when the
/// graph is disconnected or has an isolated node.
Embedding eigenmap(const WeightedGraph& g, Index ell);

/// Principal angles in radians, ascending. Small angles come from sines and
/// large ones from cosines so both ends stay accurate.
std::vector<double> principal_angles(const Subspace& a, const Subspace& b);

/// Mean principal angle between the spans of the top m nontrivial
/// eigenvectors of the two graphs.
double eigenspace_error(const WeightedGraph& test, const WeightedGraph& reference, Index m = 10);
double eigenspace_error(const WeightedGraph& test, const Subspace& reference_span);
Subspace eigenspace(const WeightedGraph& g, Index m = 10);

/// kNN-Gaussian graph of the clean cloud with k = 10, eps = 0.025.
WeightedGraph reference_graph(const PointCloud& pc_clean);

/// Coefficient of variation of the row norms of the first two embedding
/// coordinates (0 for a perfect circle).
double radius_variation(const Embedding& e);

}  // namespace otgraph
