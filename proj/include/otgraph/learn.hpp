#pragma once

#include <vector>

#include "otgraph/graphs.hpp"
#include "otgraph/numerics.hpp"

namespace otgraph {

/// One-hot rows for labeled points, zero rows elsewhere.
struct LabelMatrix {
  DenseMatrix p;               // N x C
  std::vector<Index> labeled;  // sorted

  static LabelMatrix from_labels(Index n, int classes, const std::vector<Index>& labeled,
                                 const std::vector<int>& labels);
  void validate() const;
};

struct Likelihood {
  DenseMatrix q;  // N x C
};

struct LlgcOptions {
  double cg_tol = 1e-10;
  int cg_max_iter = 0;
};

/// Minimizes sum_ij W_ij ||Q_i - Q_j||^2 + mu sum_i ||Q_i - P_i||^2 by solving
/// (L + mu I) Q = mu P, L = diag(S 1) - S, S = W + W^T, one CG solve per class.
Likelihood llgc_solve(const RowStochasticGraph& w, const LabelMatrix& labels, double mu,
                      const LlgcOptions& options = {});

double llgc_objective(const RowStochasticGraph& w, const LabelMatrix& labels, double mu, const DenseMatrix& q);
DenseMatrix llgc_gradient(const RowStochasticGraph& w, const LabelMatrix& labels, double mu, const DenseMatrix& q);

/// ||grad|| / ||2 mu P||, the stationarity measure of a solution.
double llgc_relative_gradient(const RowStochasticGraph& w, const LabelMatrix& labels, double mu,
                              const DenseMatrix& q);

struct Prediction {
  std::vector<int> labels;
  std::vector<Index> ties;  // rows whose maximum was not unique
};

/// Row argmax, ties to the smallest class index.
Prediction predict(const Likelihood& q);

/// Fraction of matching labels over indices not in `exclude`.
double accuracy(const std::vector<int>& pred, const std::vector<int>& truth, const std::vector<Index>& exclude);

/// W_bar^t X by t repeated sparse products.
DenseMatrix magic_denoise(const RowStochasticGraph& w, const DenseMatrix& x, int t);

}  // namespace otgraph
