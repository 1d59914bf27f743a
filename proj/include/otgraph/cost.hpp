#pragma once

#include "otgraph/numerics.hpp"

namespace otgraph {

/// Symmetric matrix of transport costs c_ij = d(x_i, x_j)^p. When self mass
/// is disallowed the diagonal holds +inf, which removes it from every hinge
/// and kernel evaluation.
struct CostMatrix {
  DenseMatrix c;
  double p = 2.0;
  bool self_mass_allowed = true;

  Index size() const noexcept { return c.rows(); }

  // Throws ParameterError on asymmetry, negative or non-finite off-diagonal
  // entries, or a diagonal inconsistent with self_mass_allowed.
  void validate() const;

  /// Wraps an explicit matrix (tests, external inputs).
  static CostMatrix from_matrix(DenseMatrix c, bool self_mass_allowed = true);
};

}  // namespace otgraph
