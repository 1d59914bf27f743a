#include "otgraph/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "otgraph/errors.hpp"

namespace otgraph {

namespace {

struct KindTag {
  ExperimentKind kind;
  const char* tag;
};
constexpr KindTag kKindTags[] = {{ExperimentKind::EigenSpiral, "eigen-spiral"},
                                 {ExperimentKind::SslSpiral, "ssl-spiral"},
                                 {ExperimentKind::SslDensity, "ssl-density"},
                                 {ExperimentKind::Denoise, "denoise"}};

struct MethodTag {
  Method method;
  const char* tag;
};
constexpr MethodTag kMethodTags[] = {{Method::Qot, "qot"},
                                     {Method::Entot, "entot"},
                                     {Method::KnnGauss, "knn-gauss"},
                                     {Method::Gauss, "gauss"},
                                     {Method::Magic, "magic"}};

bool uses_epsilon(Method m) { return m != Method::Magic; }
bool uses_k(Method m) { return m == Method::KnnGauss || m == Method::Magic; }

const char* metric_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::EigenSpiral: return "eigenspace_error";
    case ExperimentKind::SslSpiral:
    case ExperimentKind::SslDensity: return "accuracy";
    case ExperimentKind::Denoise: return "rmse";
  }
  return "";
}

bool higher_is_better(ExperimentKind kind) {
  return kind == ExperimentKind::SslSpiral || kind == ExperimentKind::SslDensity;
}

const char* to_string(ArmSpacing s) { return s == ArmSpacing::ArcUniform ? "arc-uniform" : "param-random"; }

ArmSpacing parse_spacing(const std::string& tag) {
  if (tag == "arc-uniform") return ArmSpacing::ArcUniform;
  if (tag == "param-random") return ArmSpacing::ParamRandom;
  throw UsageError("unknown arm spacing '" + tag + "' (expected arc-uniform or param-random)");
}

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
  return out;
}

// Accepts a list of numbers or {"logspace": [lo, hi, count]} / {"linspace": [lo, hi, count]}.
std::vector<double> parse_axis(const json& doc, const std::string& name) {
  if (doc.is_array()) return doc.get<std::vector<double>>();
  if (doc.is_number()) return {doc.get<double>()};
  if (doc.is_object() && doc.size() == 1) {
    const auto& [key, value] = *doc.items().begin();
    if (!value.is_array() || value.size() != 3) throw UsageError(name + "." + key + " must be [lo, hi, count]");
    const double lo = value[0].get<double>(), hi = value[1].get<double>();
    const int count = value[2].get<int>();
    if (count < 1) throw UsageError(name + "." + key + ": count must be >= 1");
    if (key == "logspace") return logspace(lo, hi, count);
    if (key == "linspace") return linspace(lo, hi, count);
    throw UsageError("unknown grid generator '" + key + "' for " + name);
  }
  throw UsageError(name + " must be a number, a list, or a logspace/linspace object");
}

std::vector<Index> rounded(const std::vector<double>& values) {
  std::vector<Index> out;
  for (double v : values) {
    const auto k = static_cast<Index>(std::llround(v));
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  return out;
}

template <class T>
void read_if(const json& doc, const char* key, T& target) {
  if (auto it = doc.find(key); it != doc.end()) target = it->template get<T>();
}

void reject_unknown(const json& doc, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, value] : doc.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw UsageError("unknown key '" + key + "' in " + where);
    }
  }
}

}  // namespace

const char* to_string(ExperimentKind kind) {
  for (const auto& t : kKindTags) {
    if (t.kind == kind) return t.tag;
  }
  return "?";
}

const char* to_string(Method method) {
  for (const auto& t : kMethodTags) {
    if (t.method == method) return t.tag;
  }
  return "?";
}

ExperimentKind parse_experiment_kind(const std::string& tag) {
  for (const auto& t : kKindTags) {
    if (tag == t.tag) return t.kind;
  }
  throw UsageError("unknown experiment '" + tag + "' (expected eigen-spiral, ssl-spiral, ssl-density or denoise)");
}

Method parse_method(const std::string& tag) {
  for (const auto& t : kMethodTags) {
    if (tag == t.tag) return t.method;
  }
  throw UsageError("unknown method '" + tag + "' (expected qot, entot, knn-gauss, gauss or magic)");
}

json MethodParams::to_json() const {
  json out = json::object();
  if (epsilon) out["epsilon"] = *epsilon;
  if (k) out["k"] = *k;
  return out;
}

std::vector<MethodParams> MethodGrid::cells() const {
  std::vector<MethodParams> out;
  if (uses_k(method) && uses_epsilon(method)) {
    for (Index kk : k) {
      for (double e : epsilon) out.push_back({e, kk});
    }
  } else if (uses_k(method)) {
    for (Index kk : k) out.push_back({std::nullopt, kk});
  } else {
    for (double e : epsilon) out.push_back({e, std::nullopt});
  }
  return out;
}

json MethodGrid::to_json() const {
  json out{{"method", to_string(method)}};
  if (uses_epsilon(method)) out["epsilon"] = epsilon;
  if (uses_k(method)) out["k"] = k;
  return out;
}

MethodGrid MethodGrid::from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("method")) throw UsageError("each methods entry needs a \"method\" tag");
  reject_unknown(doc, {"method", "epsilon", "k"}, "methods entry");
  MethodGrid grid;
  grid.method = parse_method(doc.at("method").get<std::string>());
  const std::string tag = to_string(grid.method);
  if (doc.contains("epsilon")) {
    if (!uses_epsilon(grid.method)) throw UsageError(tag + " takes no epsilon");
    grid.epsilon = parse_axis(doc["epsilon"], tag + ".epsilon");
  }
  if (doc.contains("k")) {
    if (!uses_k(grid.method)) throw UsageError(tag + " takes no k");
    grid.k = rounded(parse_axis(doc["k"], tag + ".k"));
  }
  grid.validate();
  return grid;
}

void MethodGrid::validate() const {
  const std::string tag = to_string(method);
  if (uses_epsilon(method) && epsilon.empty()) throw UsageError(tag + ": epsilon grid is empty");
  if (uses_k(method) && k.empty()) throw UsageError(tag + ": k grid is empty");
  for (double e : epsilon) {
    if (!(e > 0.0) || !std::isfinite(e)) throw UsageError(tag + ": epsilon values must be positive");
  }
  for (Index kk : k) {
    if (kk < 1) throw UsageError(tag + ": k values must be >= 1");
  }
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.kind = kind;
  const std::vector<Index> k_eigen{5, 10, 15, 20, 25};
  switch (kind) {
    case ExperimentKind::EigenSpiral:
      cfg.methods = {{Method::Qot, logspace(-1.5, 1.5, 12), {}},
                     {Method::Entot, logspace(-2.0, 1.0, 12), {}},
                     {Method::KnnGauss, logspace(-2.0, 1.0, 12), k_eigen},
                     {Method::Gauss, logspace(-2.0, 1.0, 12), {}},
                     {Method::Magic, {}, k_eigen}};
      break;
    case ExperimentKind::SslSpiral:
    case ExperimentKind::SslDensity: {
      std::vector<double> qot_eps = logspace(-2.0, 1.0, 12);
      if (kind == ExperimentKind::SslDensity) {
        cfg.per_arm = {100, 150, 200, 250};
        cfg.t0 = 0.5;
        cfg.t1 = 5.0;
        cfg.spacing = ArmSpacing::ParamRandom;
        cfg.label_fraction = 0.01;
        qot_eps.push_back(1.0);
        std::sort(qot_eps.begin(), qot_eps.end());
      }
      cfg.methods = {{Method::Qot, qot_eps, {}},
                     {Method::KnnGauss, logspace(-3.0, 0.0, 12), rounded(linspace(1.0, 50.0, 10))}};
      break;
    }
    case ExperimentKind::Denoise:
      cfg.methods = {{Method::Qot, logspace(-1.5, 1.5, 12), {}},
                     {Method::Entot, logspace(-2.0, 1.0, 12), {}},
                     {Method::Magic, {}, k_eigen}};
      break;
  }
  return cfg;
}

namespace {

// Keys shared by sweep and single-graph configs. `data_keys` lists what the
// "data" section may contain.
void read_settings(const json& doc, ExperimentConfig& cfg, std::initializer_list<const char*> data_keys) {
  if (auto it = doc.find("data"); it != doc.end()) {
    const json& d = *it;
    reject_unknown(d, data_keys, "data");
    read_if(d, "n", cfg.n);
    read_if(d, "ambient", cfg.ambient);
    read_if(d, "normalize", cfg.normalize);
    read_if(d, "cost_exponent", cfg.cost_exponent);
    read_if(d, "self_mass_allowed", cfg.self_mass_allowed);
    read_if(d, "arms", cfg.arms);
    if (auto pa = d.find("per_arm"); pa != d.end()) {
      cfg.per_arm = pa->is_array() ? pa->get<std::vector<int>>() : std::vector<int>{pa->get<int>()};
    }
    read_if(d, "t0", cfg.t0);
    read_if(d, "t1", cfg.t1);
    if (d.contains("spacing")) cfg.spacing = parse_spacing(d["spacing"].get<std::string>());
  }
  if (auto it = doc.find("ssl"); it != doc.end()) {
    reject_unknown(*it, {"label_fraction", "per_class_labels", "mu", "exclude_labeled"}, "ssl");
    read_if(*it, "label_fraction", cfg.label_fraction);
    read_if(*it, "per_class_labels", cfg.per_class_labels);
    read_if(*it, "mu", cfg.mu);
    read_if(*it, "exclude_labeled", cfg.exclude_labeled);
  }
  read_if(doc, "eigen_dims", cfg.eigen_dims);
  read_if(doc, "denoise_times", cfg.denoise_times);
  if (auto it = doc.find("qot"); it != doc.end()) {
    reject_unknown(*it,
                   {"delta", "theta", "kappa", "marginal_tol", "max_newton", "max_backtracks", "cg_tol",
                    "cg_max_iter"},
                   "qot");
    read_if(*it, "delta", cfg.qot.delta);
    read_if(*it, "theta", cfg.qot.theta);
    read_if(*it, "kappa", cfg.qot.kappa);
    read_if(*it, "marginal_tol", cfg.qot.marginal_tol);
    read_if(*it, "max_newton", cfg.qot.max_newton);
    read_if(*it, "max_backtracks", cfg.qot.max_backtracks);
    read_if(*it, "cg_tol", cfg.qot.cg_tol);
    read_if(*it, "cg_max_iter", cfg.qot.cg_max_iter);
  }
  if (auto it = doc.find("entropic"); it != doc.end()) {
    reject_unknown(*it, {"tol", "max_iter"}, "entropic");
    read_if(*it, "tol", cfg.entropic_tol);
    read_if(*it, "max_iter", cfg.entropic_max_iter);
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& doc) {
  if (!doc.is_object()) throw UsageError("config must be a JSON object");
  if (!doc.contains("experiment")) throw UsageError("config needs an \"experiment\" field");
  reject_unknown(doc, {"experiment", "seeds", "data", "ssl", "eigen_dims", "denoise_times", "qot", "entropic", "methods"},
                 "config");
  try {
    ExperimentConfig cfg = defaults(parse_experiment_kind(doc.at("experiment").get<std::string>()));
    read_if(doc, "seeds", cfg.seeds);
    read_settings(doc, cfg,
                  {"n", "ambient", "normalize", "cost_exponent", "self_mass_allowed", "arms", "per_arm", "t0", "t1",
                   "spacing"});
    if (auto it = doc.find("methods"); it != doc.end()) {
      if (!it->is_array()) throw UsageError("methods must be a list");
      cfg.methods.clear();
      for (const auto& m : *it) cfg.methods.push_back(MethodGrid::from_json(m));
    }
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

json ExperimentConfig::to_json() const {
  json methods_doc = json::array();
  for (const auto& m : methods) methods_doc.push_back(m.to_json());
  return json{{"experiment", to_string(kind)},
              {"seeds", seeds},
              {"data",
               {{"n", n},
                {"ambient", ambient},
                {"normalize", normalize},
                {"cost_exponent", cost_exponent},
                {"self_mass_allowed", self_mass_allowed},
                {"arms", arms},
                {"per_arm", per_arm},
                {"t0", t0},
                {"t1", t1},
                {"spacing", to_string(spacing)}}},
              {"ssl",
               {{"label_fraction", label_fraction},
                {"per_class_labels", per_class_labels},
                {"mu", mu},
                {"exclude_labeled", exclude_labeled}}},
              {"eigen_dims", eigen_dims},
              {"denoise_times", denoise_times},
              {"qot",
               {{"delta", qot.delta},
                {"theta", qot.theta},
                {"kappa", qot.kappa},
                {"marginal_tol", qot.marginal_tol},
                {"max_newton", qot.max_newton},
                {"max_backtracks", qot.max_backtracks},
                {"cg_tol", qot.cg_tol},
                {"cg_max_iter", qot.cg_max_iter}}},
              {"entropic", {{"tol", entropic_tol}, {"max_iter", entropic_max_iter}}},
              {"methods", methods_doc}};
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw UsageError("config: seeds must be non-empty");
  if (methods.empty()) throw UsageError("config: methods must be non-empty");
  for (const auto& m : methods) m.validate();
  if (n < 3) throw UsageError("config: data.n must be >= 3");
  if (ambient < 3) throw UsageError("config: data.ambient must be >= 3");
  if (!(cost_exponent > 0.0)) throw UsageError("config: data.cost_exponent must be positive");
  if (arms < 1) throw UsageError("config: data.arms must be >= 1");
  if (per_arm.empty()) throw UsageError("config: data.per_arm must be non-empty");
  for (int p : per_arm) {
    if (p < 1) throw UsageError("config: data.per_arm values must be >= 1");
  }
  if (!(t0 > 0.0) || !(t1 > t0)) throw UsageError("config: need 0 < data.t0 < data.t1");
  if (!(label_fraction > 0.0) || label_fraction > 1.0) throw UsageError("config: ssl.label_fraction must lie in (0, 1]");
  if (!(mu > 0.0)) throw UsageError("config: ssl.mu must be positive");
  if (eigen_dims < 1) throw UsageError("config: eigen_dims must be >= 1");
  if (denoise_times.empty()) throw UsageError("config: denoise_times must be non-empty");
  for (int t : denoise_times) {
    if (t < 0) throw UsageError("config: denoise_times must be >= 0");
  }
  if (!(entropic_tol > 0.0) || entropic_max_iter < 1) throw UsageError("config: invalid entropic settings");
  try {
    QotConfig probe = qot;
    probe.epsilon = 1.0;
    probe.validate();
  } catch (const ParameterError& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

PipelineConfig PipelineConfig::from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw UsageError("config must be a JSON object");
  reject_unknown(doc,
                 {"input", "edges", "labels", "method", "epsilon", "k", "dims", "seed", "data", "ssl",
                  "denoise_times", "qot", "entropic"},
                 "config");
  auto resolve = [&](const json& v) {
    std::filesystem::path p = v.get<std::string>();
    return p.is_relative() ? base_dir / p : p;
  };
  try {
    PipelineConfig cfg;
    cfg.settings = ExperimentConfig::defaults(ExperimentKind::EigenSpiral);
    if (!doc.contains("input")) throw UsageError("config needs an \"input\" point cloud path");
    cfg.input = resolve(doc["input"]);
    if (doc.contains("edges")) cfg.edges = resolve(doc["edges"]);
    if (doc.contains("labels")) cfg.labels = resolve(doc["labels"]);
    if (doc.contains("method")) {
      MethodGrid grid;
      grid.method = parse_method(doc["method"].get<std::string>());
      if (doc.contains("epsilon")) grid.epsilon = {doc["epsilon"].get<double>()};
      if (doc.contains("k")) grid.k = {doc["k"].get<Index>()};
      const std::string tag = to_string(grid.method);
      if (!uses_epsilon(grid.method) && doc.contains("epsilon")) throw UsageError(tag + " takes no epsilon");
      if (!uses_k(grid.method) && doc.contains("k")) throw UsageError(tag + " takes no k");
      grid.validate();
      cfg.method = grid.method;
      cfg.params = grid.cells().front();
    } else if (doc.contains("epsilon") || doc.contains("k")) {
      throw UsageError("epsilon/k given without a method");
    }
    read_if(doc, "dims", cfg.dims);
    read_if(doc, "seed", cfg.seed);
    read_settings(doc, cfg.settings, {"cost_exponent", "self_mass_allowed"});
    cfg.settings.validate();
    if (cfg.dims < 1) throw UsageError("config: dims must be >= 1");
    return cfg;
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
}

json PipelineConfig::to_json() const {
  json out{{"input", input.string()}, {"dims", dims}, {"seed", seed}};
  if (edges) out["edges"] = edges->string();
  if (labels) out["labels"] = labels->string();
  if (method) {
    out["method"] = to_string(*method);
    out.update(params.to_json());
  }
  const json s = settings.to_json();
  out["data"] = {{"cost_exponent", s["data"]["cost_exponent"]}, {"self_mass_allowed", s["data"]["self_mass_allowed"]}};
  for (const char* key : {"ssl", "denoise_times", "qot", "entropic"}) out[key] = s[key];
  return out;
}

WeightedGraph PipelineConfig::graph_for(const PointCloud& pc, json* diagnostics) const {
  if (edges) {
    WeightedGraph g = load_edge_list(*edges);
    if (g.n != pc.size()) {
      throw UsageError("edge list has " + std::to_string(g.n) + " nodes but the input has " +
                       std::to_string(pc.size()) + " points");
    }
    if (diagnostics) *diagnostics = json{{"edges_file", edges->string()}, {"edges", g.edges.size()}};
    return g;
  }
  if (!method) throw UsageError("config needs either \"edges\" or a \"method\"");
  const GraphInputs inputs(pc, settings.cost_exponent, settings.self_mass_allowed);
  GraphBuild build = build_graph(*method, params, inputs, settings);
  if (diagnostics) *diagnostics = std::move(build.diagnostics);
  return std::move(build.graph);
}

json ResultRecord::to_json() const {
  json out{{"experiment", experiment}, {"method", method}, {"params", params}, {"variant", variant},
           {"seed", seed},             {"metric", metric}};
  if (ok()) {
    out["value"] = value;
  } else {
    out["value"] = nullptr;
    out["error"] = error;
  }
  out["details"] = details;
  return out;
}

SpiralData make_eigen_spiral_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  SeededRng rng(seed);
  SpiralData data;
  data.clean = closed_spiral(cfg.n);
  DenseMatrix basis;
  const PointCloud raw = embed_with_noise(data.clean, rng, cfg.ambient, hetero_noise_magnitude, &basis);
  const double factor = cfg.normalize ? normalization_factor(raw) : 1.0;
  data.noisy = raw;
  data.noisy.points *= factor;
  data.target = factor * (data.clean.points * basis.transpose());
  return data;
}

SslData make_ssl_data(const ExperimentConfig& cfg, std::uint64_t seed, int per_arm) {
  SeededRng rng(seed);
  SslData data;
  data.clean = multi_arm_spiral(cfg.arms, per_arm, cfg.t0, cfg.t1, cfg.spacing, rng);
  data.noisy = embed_ssl_noise(data.clean, rng, cfg.ambient);
  if (cfg.normalize) data.noisy = normalize_scale(data.noisy);
  SeededRng label_rng = SeededRng::derive(seed, 1);
  data.labeled = label_subset(data.noisy, cfg.label_fraction, cfg.per_class_labels, label_rng);
  return data;
}

GraphInputs::GraphInputs(const PointCloud& pc, double cost_exponent, bool self_mass_allowed)
    : neighbors(pc),
      cost(cost_exponent == 2.0 ? CostMatrix::from_matrix(neighbors.sq_distances(), self_mass_allowed)
                                : pairwise_cost(pc, cost_exponent, self_mass_allowed)) {}

GraphBuild build_graph(Method method, const MethodParams& params, const GraphInputs& inputs,
                       const ExperimentConfig& cfg) {
  GraphBuild out;
  json& diag = out.diagnostics;
  switch (method) {
    case Method::Qot: {
      QotConfig qc = cfg.qot;
      qc.epsilon = params.epsilon.value();
      const QotSolution sol = solve_qot(inputs.cost, qc);
      diag["newton_iterations"] = sol.diagnostics.newton_iterations;
      diag["marginal_residual"] = sol.diagnostics.marginal_residual;
      diag["duality_gap"] = sol.diagnostics.duality_gap;
      out.graph = plan_to_graph(sol.plan);
      break;
    }
    case Method::Entot: {
      const EntropicSolution sol =
          solve_entropic(inputs.cost, params.epsilon.value(), cfg.entropic_tol, cfg.entropic_max_iter);
      diag["iterations"] = sol.iterations;
      diag["marginal_residual"] = sol.marginal_residual;
      out.graph = plan_to_graph(sol.plan);
      break;
    }
    case Method::KnnGauss:
      out.graph = knn_gaussian(inputs.neighbors, params.k.value(), params.epsilon.value());
      break;
    case Method::Gauss:
      out.graph = gaussian_full(inputs.neighbors, params.epsilon.value());
      break;
    case Method::Magic:
      out.graph = magic_adaptive(inputs.neighbors, params.k.value());
      break;
  }
  const DegreeStats ds = degree_stats(out.graph);
  diag["edges"] = out.graph.edges.size();
  diag["components"] = out.graph.component_count();
  diag["degree"] = {{"mean", ds.mean}, {"stddev", ds.stddev}, {"min", ds.min}, {"max", ds.max}};
  return out;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

struct Cell {
  const MethodGrid* grid;
  MethodParams params;
};

std::vector<Cell> all_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (const auto& grid : cfg.methods) {
    for (const auto& p : grid.cells()) cells.push_back({&grid, p});
  }
  return cells;
}

// Evaluates one dataset variant for one seed: shared inputs are built once,
// cells run in parallel and fill their own slots.
template <class Evaluate>
void run_variant(const ExperimentConfig& cfg, std::uint64_t seed, const json& variant, int jobs,
                 std::size_t records_per_cell, Evaluate evaluate, std::vector<ResultRecord>& out) {
  const std::vector<Cell> cells = all_cells(cfg);
  std::vector<std::vector<ResultRecord>> slots(cells.size());
  parallel_for(cells.size(), jobs, [&](std::size_t i) {
    const Cell& cell = cells[i];
    ResultRecord base;
    base.experiment = to_string(cfg.kind);
    base.method = to_string(cell.grid->method);
    base.params = cell.params.to_json();
    base.variant = variant;
    base.seed = seed;
    base.metric = metric_name(cfg.kind);
    const auto start = std::chrono::steady_clock::now();
    try {
      slots[i] = evaluate(cell, base);
    } catch (const std::exception& e) {
      base.error = e.what();
      slots[i].assign(records_per_cell, base);
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto& r : slots[i]) r.wall_time_s = elapsed / static_cast<double>(slots[i].size());
  });
  for (auto& s : slots) {
    for (auto& r : s) out.push_back(std::move(r));
  }
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg, int jobs) {
  cfg.validate();
  SweepResult result;
  auto& records = result.records;

  for (std::uint64_t seed : cfg.seeds) {
    switch (cfg.kind) {
      case ExperimentKind::EigenSpiral: {
        const SpiralData data = make_eigen_spiral_data(cfg, seed);
        const GraphInputs inputs(data.noisy, cfg.cost_exponent, cfg.self_mass_allowed);
        const Subspace reference = eigenspace(reference_graph(data.clean), cfg.eigen_dims);
        run_variant(cfg, seed, json::object(), jobs, 1,
                    [&](const Cell& cell, ResultRecord& r) {
                      GraphBuild g = build_graph(cell.grid->method, cell.params, inputs, cfg);
                      r.details = std::move(g.diagnostics);
                      r.value = eigenspace_error(g.graph, reference);
                      return std::vector<ResultRecord>{r};
                    },
                    records);
        break;
      }
      case ExperimentKind::SslSpiral:
      case ExperimentKind::SslDensity:
        for (int per_arm : cfg.per_arm) {
          const SslData data = make_ssl_data(cfg, seed, per_arm);
          const GraphInputs inputs(data.noisy, cfg.cost_exponent, cfg.self_mass_allowed);
          const std::vector<int>& truth = *data.noisy.labels;
          const LabelMatrix p =
              LabelMatrix::from_labels(data.noisy.size(), data.noisy.num_classes(), data.labeled, truth);
          const std::vector<Index> exclude = cfg.exclude_labeled ? data.labeled : std::vector<Index>{};
          run_variant(cfg, seed, json{{"per_arm", per_arm}}, jobs, 1,
                      [&](const Cell& cell, ResultRecord& r) {
                        GraphBuild g = build_graph(cell.grid->method, cell.params, inputs, cfg);
                        r.details = std::move(g.diagnostics);
                        const RowStochasticGraph w = row_normalize(g.graph);
                        const Likelihood q = llgc_solve(w, p, cfg.mu);
                        const Prediction pred = predict(q);
                        r.details["llgc_relative_gradient"] = llgc_relative_gradient(w, p, cfg.mu, q.q);
                        r.details["ties"] = pred.ties.size();
                        r.value = accuracy(pred.labels, truth, exclude);
                        return std::vector<ResultRecord>{r};
                      },
                      records);
        }
        break;
      case ExperimentKind::Denoise: {
        const SpiralData data = make_eigen_spiral_data(cfg, seed);
        const GraphInputs inputs(data.noisy, cfg.cost_exponent, cfg.self_mass_allowed);
        const double n = static_cast<double>(data.noisy.size());
        run_variant(cfg, seed, json::object(), jobs, cfg.denoise_times.size(),
                    [&](const Cell& cell, ResultRecord& r) {
                      GraphBuild g = build_graph(cell.grid->method, cell.params, inputs, cfg);
                      r.details = std::move(g.diagnostics);
                      const RowStochasticGraph w = row_normalize(g.graph);
                      std::vector<ResultRecord> out;
                      for (int t : cfg.denoise_times) {
                        ResultRecord rt = r;
                        rt.variant = json{{"t", t}};
                        const DenseMatrix x = magic_denoise(w, data.noisy.points, t);
                        rt.value = std::sqrt((x - data.target).squaredNorm() / n);
                        out.push_back(std::move(rt));
                      }
                      return out;
                    },
                    records);
        break;
      }
    }
  }
  result.summary = summarize(cfg, records);
  return result;
}

json summarize(const ExperimentConfig& cfg, const std::vector<ResultRecord>& records) {
  const bool maximize = higher_is_better(cfg.kind);
  struct Best {
    std::uint64_t seed;
    json variant;
    std::string method;
    const ResultRecord* record = nullptr;
    int cells = 0;
    int failed = 0;
  };
  // Keyed by (variant, method, seed) in first-seen order.
  std::vector<Best> best;
  std::map<std::string, std::size_t> index;
  for (const auto& r : records) {
    const std::string key = r.variant.dump() + "|" + r.method + "|" + std::to_string(r.seed);
    auto [it, inserted] = index.try_emplace(key, best.size());
    if (inserted) best.push_back({r.seed, r.variant, r.method});
    Best& b = best[it->second];
    ++b.cells;
    if (!r.ok() || std::isnan(r.value)) {
      ++b.failed;
      continue;
    }
    if (!b.record || (maximize ? r.value > b.record->value : r.value < b.record->value)) b.record = &r;
  }

  json best_doc = json::array();
  std::map<std::string, std::vector<double>> per_group;
  std::vector<std::pair<json, std::string>> group_order;
  for (const auto& b : best) {
    json entry{{"seed", b.seed},   {"variant", b.variant},  {"method", b.method},
               {"cells", b.cells}, {"failed", b.failed}};
    const std::string group = b.variant.dump() + "|" + b.method;
    if (!per_group.count(group)) group_order.emplace_back(b.variant, b.method);
    auto& values = per_group[group];
    if (b.record) {
      entry["value"] = b.record->value;
      entry["params"] = b.record->params;
      values.push_back(b.record->value);
    } else {
      entry["value"] = nullptr;
    }
    best_doc.push_back(std::move(entry));
  }

  json aggregate = json::array();
  for (const auto& [variant, method] : group_order) {
    std::vector<double> v = per_group[variant.dump() + "|" + method];
    json entry{{"variant", variant}, {"method", method}, {"seeds", v.size()}};
    if (!v.empty()) {
      double sum = 0.0;
      for (double x : v) sum += x;
      std::sort(v.begin(), v.end());
      const std::size_t m = v.size();
      entry["mean_best"] = sum / static_cast<double>(m);
      entry["median_best"] = m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
    }
    aggregate.push_back(std::move(entry));
  }

  return json{{"experiment", to_string(cfg.kind)},
              {"metric", metric_name(cfg.kind)},
              {"direction", maximize ? "max" : "min"},
              {"best", best_doc},
              {"aggregate", aggregate}};
}

int resolve_jobs(std::optional<int> flag) {
  if (flag) {
    if (*flag < 1) throw UsageError("--jobs must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("OTGRAPH_JOBS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw UsageError(std::string("OTGRAPH_JOBS must be a positive integer, got '") + env + "'");
    return static_cast<int>(v);
  }
  return 1;
}

}  // namespace otgraph
