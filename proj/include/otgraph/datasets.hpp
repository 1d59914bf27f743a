#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "otgraph/cost.hpp"
#include "otgraph/numerics.hpp"

namespace otgraph {

/// N points in D dimensions, one point per row, with optional per-point
/// curve parameters and class labels.
struct PointCloud {
  DenseMatrix points;
  std::optional<Vector> params;
  std::optional<std::vector<int>> labels;

  Index size() const noexcept { return points.rows(); }
  Index dim() const noexcept { return points.cols(); }
  int num_classes() const;

  // Throws ParameterError when an invariant is broken.
  void validate() const;
};

// Noise envelopes.
double hetero_noise_magnitude(double t);  // 0.05 + 0.95 (1 + cos 6t) / 2
double ssl_noise_magnitude(double t);     // 1 - sin(3t)^4

Eigen::Vector3d closed_spiral_point(double t);
Eigen::Vector3d closed_spiral_tangent(double t);

/// n points on the closed 3D spiral, evenly spaced in arc length, t in [0, 2pi).
PointCloud closed_spiral(Index n);

/// x_hat_i = R x_i + eta_i with ||eta_i|| = magnitude(t_i) and uniformly random
/// direction; R is a random ambient x D matrix with orthonormal columns.
/// When `basis` is non-null it receives R.
PointCloud embed_with_noise(const PointCloud& pc, SeededRng& rng, Index ambient,
                            const std::function<double(double)>& magnitude, DenseMatrix* basis = nullptr);

PointCloud embed_hetero_noise(const PointCloud& pc, SeededRng& rng, Index ambient = 100);
PointCloud embed_ssl_noise(const PointCloud& pc, SeededRng& rng, Index ambient = 100);

/// Rescales so that N^-2 sum_ij ||x_i - x_j||^2 = 1.
PointCloud normalize_scale(const PointCloud& pc);
/// The factor normalize_scale multiplies by.
double normalization_factor(const PointCloud& pc);

enum class ArmSpacing { ArcUniform, ParamRandom };

/// Arc length of the planar spiral (t cos t, t sin t) from 0 to t.
double planar_spiral_arc_length(double t);

/// `arms` copies of the planar spiral (t cos t, t sin t), t in [t0, t1],
/// rotated by 2 pi k / arms. Labels hold the arm index k.
PointCloud multi_arm_spiral(int arms, int per_arm, double t0, double t1, ArmSpacing spacing,
                            SeededRng& rng);

/// Squared Euclidean distances between rows, exactly symmetric with a zero
/// diagonal.
DenseMatrix pairwise_sq_distances(const DenseMatrix& points);

/// c_ij = ||x_i - x_j||^p.
CostMatrix pairwise_cost(const PointCloud& pc, double p = 2.0, bool self_mass_allowed = true);

/// Random labeled subset, sorted ascending. With per_class, each class
/// contributes ceil(fraction * n_class) (at least 1) indices.
std::vector<Index> label_subset(const PointCloud& pc, double fraction, bool per_class,
                                SeededRng& rng);

void save_csv(const PointCloud& pc, const std::filesystem::path& path);
PointCloud load_csv(const std::filesystem::path& path);

/// Numeric matrix with a named header row, same number format as save_csv.
void save_matrix_csv(const DenseMatrix& m, const std::vector<std::string>& columns,
                     const std::filesystem::path& path);

/// `index,label` files for labeled subsets and predictions.
struct IndexLabels {
  std::vector<Index> indices;
  std::vector<int> labels;
};
void save_index_labels(const std::vector<Index>& indices, const std::vector<int>& labels,
                       const std::filesystem::path& path);
IndexLabels load_index_labels(const std::filesystem::path& path);

}  // namespace otgraph
