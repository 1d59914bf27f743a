#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "otgraph/datasets.hpp"
#include "otgraph/graphs.hpp"
#include "otgraph/learn.hpp"
#include "otgraph/spectral.hpp"
#include "otgraph/transport.hpp"

namespace otgraph {

using json = nlohmann::json;

enum class ExperimentKind { EigenSpiral, SslSpiral, SslDensity, Denoise };
enum class Method { Qot, Entot, KnnGauss, Gauss, Magic };

const char* to_string(ExperimentKind kind);
const char* to_string(Method method);
// Throw UsageError on unknown tags.
ExperimentKind parse_experiment_kind(const std::string& tag);
Method parse_method(const std::string& tag);

/// One point of a method's parameter grid. `k` is the neighbor count for
/// knn-gauss and the bandwidth neighbor for magic.
struct MethodParams {
  std::optional<double> epsilon;
  std::optional<Index> k;

  json to_json() const;
};

/// Cartesian grid over the axes the method uses. qot, entot and gauss
/// take only `epsilon`, magic only `k`, knn-gauss both.
struct MethodGrid {
  Method method = Method::Qot;
  std::vector<double> epsilon;
  std::vector<Index> k;

  std::vector<MethodParams> cells() const;
  json to_json() const;
  static MethodGrid from_json(const json& doc);
  void validate() const;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::EigenSpiral;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  // Data.
  Index n = 1000;  // closed spiral
  Index ambient = 100;
  bool normalize = true;  // rescale the noisy cloud to unit mean squared distance
  double cost_exponent = 2.0;
  bool self_mass_allowed = true;
  int arms = 10;
  std::vector<int> per_arm{150};
  double t0 = 1.0;
  double t1 = 5.0;
  ArmSpacing spacing = ArmSpacing::ArcUniform;

  // Semi-supervised learning.
  double label_fraction = 0.025;
  bool per_class_labels = true;
  double mu = 0.1;
  bool exclude_labeled = true;

  // Spectral evaluation.
  Index eigen_dims = 10;

  std::vector<int> denoise_times{1, 3, 5};

  QotConfig qot;
  double entropic_tol = 1e-9;
  int entropic_max_iter = 100000;

  std::vector<MethodGrid> methods;

  /// Grids and dataset settings used for each experiment when the config
  /// leaves them out.
  static ExperimentConfig defaults(ExperimentKind kind);
  /// Overlays the keys present in `doc` on the defaults for its experiment.
  static ExperimentConfig from_json(const json& doc);
  json to_json() const;

  void validate() const;
};

/// Settings for the single-graph commands (graph, embed, ssl, denoise).
/// Relative paths are resolved against `base_dir`.
struct PipelineConfig {
  std::filesystem::path input;
  std::optional<std::filesystem::path> edges;   // reuse a saved edge list
  std::optional<std::filesystem::path> labels;  // index,label file of labeled points
  std::optional<Method> method;
  MethodParams params;
  ExperimentConfig settings;  // cost, solver, ssl and diffusion settings
  Index dims = 10;
  std::uint64_t seed = 1;

  static PipelineConfig from_json(const json& doc, const std::filesystem::path& base_dir = {});
  json to_json() const;

  /// Loads `edges` if set, else builds the graph with `method`.
  WeightedGraph graph_for(const PointCloud& pc, json* diagnostics = nullptr) const;
};

struct ResultRecord {
  std::string experiment;
  std::string method;
  json params;
  json variant = json::object();  // dataset variant (points per arm) or diffusion time
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  json details = json::object();  // solver and graph diagnostics
  double wall_time_s = 0.0;
  std::string error;  // non-empty when the cell failed

  bool ok() const noexcept { return error.empty(); }
  /// Deterministic fields only (no wall time).
  json to_json() const;
};

// Datasets regenerated from a seed.
struct SpiralData {
  PointCloud clean;  // 3D curve
  PointCloud noisy;  // normalized, ambient dimension
  DenseMatrix target;  // clean points embedded and scaled like `noisy`
};
SpiralData make_eigen_spiral_data(const ExperimentConfig& cfg, std::uint64_t seed);

struct SslData {
  PointCloud clean;  // planar arms
  PointCloud noisy;  // normalized, ambient dimension, labels set
  std::vector<Index> labeled;
};
SslData make_ssl_data(const ExperimentConfig& cfg, std::uint64_t seed, int per_arm);

/// Shared per-dataset state for graph construction.
struct GraphInputs {
  explicit GraphInputs(const PointCloud& pc, double cost_exponent = 2.0, bool self_mass_allowed = true);

  NeighborTable neighbors;
  CostMatrix cost;
};

struct GraphBuild {
  WeightedGraph graph;
  json diagnostics;
};

GraphBuild build_graph(Method method, const MethodParams& params, const GraphInputs& inputs,
                       const ExperimentConfig& cfg);

struct SweepResult {
  std::vector<ResultRecord> records;
  json summary;
};

/// Runs every (seed, dataset variant, method, parameter) cell, up to `jobs`
/// at a time. Records come back in cell order regardless of `jobs`.
SweepResult run_sweep(const ExperimentConfig& cfg, int jobs = 1);

/// Per (seed, variant, method) best metric value over the grid: the minimum
/// for errors, the maximum for accuracies. Failed cells are skipped.
json summarize(const ExperimentConfig& cfg, const std::vector<ResultRecord>& records);

/// Runs `count` independent tasks on up to `jobs` threads.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task);

/// Number of parallel jobs from an explicit flag, else OTGRAPH_JOBS, else 1.
int resolve_jobs(std::optional<int> flag);

}  // namespace otgraph
