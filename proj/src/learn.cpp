#include "otgraph/learn.hpp"

#include <algorithm>
#include <string>

namespace otgraph {

namespace {

// L + mu I with L the combinatorial Laplacian of S = W + W^T.
SparseMatrix shifted_laplacian(const RowStochasticGraph& w, double mu) {
  const SparseMatrix wc = w.w;  // column-major copy
  SparseMatrix s = wc + SparseMatrix(wc.transpose());
  const Vector degree = s * Vector::Ones(s.cols());
  SparseMatrix shift(s.rows(), s.cols());
  std::vector<Eigen::Triplet<double>> diag;
  diag.reserve(static_cast<std::size_t>(s.rows()));
  for (Index i = 0; i < s.rows(); ++i) diag.emplace_back(i, i, degree[i] + mu);
  shift.setFromTriplets(diag.begin(), diag.end());
  SparseMatrix out = shift - s;
  out.makeCompressed();
  return out;
}

void check_shapes(const RowStochasticGraph& w, const LabelMatrix& labels) {
  if (w.size() != labels.p.rows()) throw ParameterError("llgc: graph and label matrix sizes differ");
}

}  // namespace

LabelMatrix LabelMatrix::from_labels(Index n, int classes, const std::vector<Index>& labeled,
                                     const std::vector<int>& labels) {
  if (classes < 1) throw ParameterError("LabelMatrix: need at least one class");
  if (static_cast<Index>(labels.size()) != n) throw ParameterError("LabelMatrix: labels length != N");
  LabelMatrix out;
  out.p = DenseMatrix::Zero(n, classes);
  out.labeled = labeled;
  std::sort(out.labeled.begin(), out.labeled.end());
  for (Index i : out.labeled) {
    if (i < 0 || i >= n) throw ParameterError("LabelMatrix: labeled index out of range");
    const int l = labels[static_cast<std::size_t>(i)];
    if (l < 0 || l >= classes) throw ParameterError("LabelMatrix: label out of range");
    out.p(i, l) = 1.0;
  }
  return out;
}

void LabelMatrix::validate() const {
  std::vector<bool> is_labeled(static_cast<std::size_t>(p.rows()), false);
  for (Index i : labeled) {
    if (i < 0 || i >= p.rows()) throw ParameterError("LabelMatrix: labeled index out of range");
    is_labeled[static_cast<std::size_t>(i)] = true;
  }
  for (Index i = 0; i < p.rows(); ++i) {
    const auto ones = (p.row(i).array() == 1.0).count();
    const auto zeros = (p.row(i).array() == 0.0).count();
    const bool one_hot = ones == 1 && zeros == p.cols() - 1;
    if (is_labeled[static_cast<std::size_t>(i)] ? !one_hot : zeros != p.cols()) {
      throw ParameterError("LabelMatrix: row " + std::to_string(i) + " violates the one-hot/zero layout");
    }
  }
}

Likelihood llgc_solve(const RowStochasticGraph& w, const LabelMatrix& labels, double mu, const LlgcOptions& options) {
  if (!(mu > 0.0)) throw ParameterError("llgc_solve: mu must be positive");
  check_shapes(w, labels);
  const SparseSymmetricOperator system(shifted_laplacian(w, mu));
  CgOptions cg;
  cg.tol = options.cg_tol;
  cg.max_iter = options.cg_max_iter;
  Likelihood out;
  out.q.resize(labels.p.rows(), labels.p.cols());
  for (Index c = 0; c < labels.p.cols(); ++c) {
    out.q.col(c) = cg_solve(system, mu * labels.p.col(c), cg).x;
  }
  return out;
}

double llgc_objective(const RowStochasticGraph& w, const LabelMatrix& labels, double mu, const DenseMatrix& q) {
  check_shapes(w, labels);
  double consistency = 0.0;
  for (Index i = 0; i < w.w.outerSize(); ++i) {
    for (decltype(w.w)::InnerIterator it(w.w, i); it; ++it) {
      consistency += it.value() * (q.row(it.row()) - q.row(it.col())).squaredNorm();
    }
  }
  return consistency + mu * (q - labels.p).squaredNorm();
}

DenseMatrix llgc_gradient(const RowStochasticGraph& w, const LabelMatrix& labels, double mu, const DenseMatrix& q) {
  check_shapes(w, labels);
  const SparseMatrix wc = w.w;
  const SparseMatrix s = wc + SparseMatrix(wc.transpose());
  const Vector degree = s * Vector::Ones(s.cols());
  const DenseMatrix lq = degree.asDiagonal() * q - s * q;
  return 2.0 * lq + 2.0 * mu * (q - labels.p);
}

double llgc_relative_gradient(const RowStochasticGraph& w, const LabelMatrix& labels, double mu,
                              const DenseMatrix& q) {
  const double scale = 2.0 * mu * labels.p.norm();
  const double g = llgc_gradient(w, labels, mu, q).norm();
  return scale > 0.0 ? g / scale : g;
}

Prediction predict(const Likelihood& q) {
  if (q.q.cols() < 1) throw ParameterError("predict: need at least one class");
  Prediction out;
  out.labels.resize(static_cast<std::size_t>(q.q.rows()));
  for (Index i = 0; i < q.q.rows(); ++i) {
    Index best = 0;
    bool tie = false;
    for (Index c = 1; c < q.q.cols(); ++c) {
      if (q.q(i, c) > q.q(i, best)) {
        best = c;
        tie = false;
      } else if (q.q(i, c) == q.q(i, best)) {
        tie = true;
      }
    }
    out.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    if (tie) out.ties.push_back(i);
  }
  return out;
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& truth, const std::vector<Index>& exclude) {
  if (pred.size() != truth.size()) throw ParameterError("accuracy: prediction and truth lengths differ");
  std::vector<bool> skip(pred.size(), false);
  for (Index i : exclude) {
    if (i >= 0 && static_cast<std::size_t>(i) < skip.size()) skip[static_cast<std::size_t>(i)] = true;
  }
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (skip[i]) continue;
    ++total;
    if (pred[i] == truth[i]) ++correct;
  }
  if (total == 0) throw ParameterError("accuracy: evaluation set is empty");
  return static_cast<double>(correct) / static_cast<double>(total);
}

DenseMatrix magic_denoise(const RowStochasticGraph& w, const DenseMatrix& x, int t) {
  if (t < 0) throw ParameterError("magic_denoise: t must be >= 0");
  if (x.rows() != w.size()) throw ParameterError("magic_denoise: data rows != graph size");
  DenseMatrix out = x;
  for (int step = 0; step < t; ++step) out = w.w * out;
  return out;
}

}  // namespace otgraph
