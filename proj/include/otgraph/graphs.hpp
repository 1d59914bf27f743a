#pragma once

#include <filesystem>
#include <vector>

#include "otgraph/datasets.hpp"
#include "otgraph/numerics.hpp"
#include "otgraph/transport.hpp"

namespace otgraph {

struct Edge {
  Index i = 0;
  Index j = 0;  // i < j
  double w = 0.0;
};

/// Undirected weighted graph stored as its upper-triangle edge list, sorted
/// by (i, j). Self weights are optional and kept separately.
struct WeightedGraph {
  Index n = 0;
  std::vector<Edge> edges;
  std::vector<double> self_weights;  // empty, or length n

  /// Symmetric adjacency including self weights.
  SparseMatrix adjacency() const;
  /// Number of incident edges per node (self weights ignored).
  std::vector<Index> degrees() const;
  Vector weighted_degrees() const;
  /// Connected components (self weights ignored); returns component count.
  int component_count() const;

  // Throws ParameterError when edges are out of range, unordered, duplicated
  // or carry non-positive or non-finite weights.
  void validate() const;

  /// Builds from an arbitrary symmetric matrix; strictly positive entries
  /// above the diagonal become edges.
  static WeightedGraph from_symmetric(const SparseMatrix& w, bool keep_self = false);
};

/// Row-stochastic random-walk operator W_bar = D^-1 W, CSR storage.
struct RowStochasticGraph {
  Eigen::SparseMatrix<double, Eigen::RowMajor> w;

  Index size() const noexcept { return w.rows(); }
  DenseMatrix apply(const DenseMatrix& x) const { return w * x; }
};

/// Sorted nearest-neighbor lookups over a precomputed squared-distance matrix.
/// Ties in distance are broken by the smaller index; a point is never its own
/// neighbor.
class NeighborTable {
 public:
  explicit NeighborTable(DenseMatrix sq_distances);
  explicit NeighborTable(const PointCloud& pc) : NeighborTable(pairwise_sq_distances(pc.points)) {}

  Index size() const noexcept { return d2_.rows(); }
  const DenseMatrix& sq_distances() const noexcept { return d2_; }
  /// The k nearest neighbors of i, closest first.
  std::vector<Index> nearest(Index i, Index k) const;

 private:
  DenseMatrix d2_;
};

/// Weights at or below this are treated as absent.
inline constexpr double kWeightFloor = 1e-300;

/// Union-symmetrized kNN graph with weights exp(-d^2 / eps).
WeightedGraph knn_gaussian(const NeighborTable& nt, Index k, double epsilon);
WeightedGraph knn_gaussian(const PointCloud& pc, Index k, double epsilon);

/// Complete graph with weights exp(-d^2 / eps).
WeightedGraph gaussian_full(const NeighborTable& nt, double epsilon);
WeightedGraph gaussian_full(const PointCloud& pc, double epsilon);

/// Per-point bandwidth from the ka-th neighbor distance.
Vector magic_bandwidths(const NeighborTable& nt, Index ka);

/// Adaptive kernel: sigma_i is the distance to the ka-th nearest neighbor,
/// candidate edges are the union of 3 ka nearest neighbors, and
/// w_ij = (exp(-d_ij^2 / sigma_i^2) + exp(-d_ij^2 / sigma_j^2)) / 2.
WeightedGraph magic_adaptive(const NeighborTable& nt, Index ka);
WeightedGraph magic_adaptive(const PointCloud& pc, Index ka);

/// Strictly positive off-diagonal plan entries as edges.
WeightedGraph plan_to_graph(const TransportPlan& plan, bool drop_self = true);

/// Throws GraphError naming isolated nodes.
RowStochasticGraph row_normalize(const WeightedGraph& g);

/// Edge-list text format: header "# n=<N> sym=1", then "i<TAB>j<TAB>w" per
/// edge with i < j. Retained self weights are written as "i<TAB>i<TAB>w".
void save_edge_list(const WeightedGraph& g, const std::filesystem::path& path);
WeightedGraph load_edge_list(const std::filesystem::path& path);

struct DegreeStats {
  double mean = 0.0;
  double stddev = 0.0;
  Index min = 0;
  Index max = 0;
};
DegreeStats degree_stats(const WeightedGraph& g);

}  // namespace otgraph
