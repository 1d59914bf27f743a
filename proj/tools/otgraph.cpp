// otgraph: command-line harness for graph construction, embeddings,
// label propagation, denoising and parameter sweeps.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "otgraph/errors.hpp"
#include "otgraph/experiments.hpp"

namespace fs = std::filesystem;
using namespace otgraph;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr Index kDenseWarnSize = 5000;

struct Options {
  std::string config;
  std::optional<int> jobs;
  std::optional<std::uint64_t> seed;
  std::string out = "otgraph-out";
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError("config " + path.string() + ": " + e.what());
  }
}

void write_json(const json& doc, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

fs::path prepare_out(const Options& opt) {
  const fs::path dir = opt.out;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

ExperimentConfig load_experiment(const Options& opt) {
  ExperimentConfig cfg = ExperimentConfig::from_json(read_json(opt.config));
  if (opt.seed) cfg.seeds = {*opt.seed};
  return cfg;
}

PipelineConfig load_pipeline(const Options& opt) {
  const fs::path path = opt.config;
  PipelineConfig cfg = PipelineConfig::from_json(read_json(path), path.parent_path());
  if (opt.seed) cfg.seed = *opt.seed;
  return cfg;
}

std::string suffix_for(const ExperimentConfig& cfg, int per_arm) {
  return cfg.per_arm.size() > 1 ? "_" + std::to_string(per_arm) : "";
}

int cmd_generate(const Options& opt) {
  const ExperimentConfig cfg = load_experiment(opt);
  const fs::path dir = prepare_out(opt);
  const std::uint64_t seed = cfg.seeds.front();
  json files = json::array();
  if (cfg.kind == ExperimentKind::EigenSpiral || cfg.kind == ExperimentKind::Denoise) {
    const SpiralData data = make_eigen_spiral_data(cfg, seed);
    save_csv(data.clean, dir / "clean.csv");
    save_csv(data.noisy, dir / "noisy.csv");
    files = {"clean.csv", "noisy.csv"};
  } else {
    for (int per_arm : cfg.per_arm) {
      const SslData data = make_ssl_data(cfg, seed, per_arm);
      const std::string sfx = suffix_for(cfg, per_arm);
      std::vector<int> labels;
      for (Index i : data.labeled) labels.push_back((*data.noisy.labels)[static_cast<std::size_t>(i)]);
      save_csv(data.clean, dir / ("clean" + sfx + ".csv"));
      save_csv(data.noisy, dir / ("noisy" + sfx + ".csv"));
      save_index_labels(data.labeled, labels, dir / ("labeled" + sfx + ".csv"));
      for (const char* stem : {"clean", "noisy", "labeled"}) files.push_back(stem + sfx + ".csv");
    }
  }
  write_json({{"command", "generate"}, {"seed", seed}, {"config", cfg.to_json()}, {"files", files}},
             dir / "manifest.json");
  std::cout << "wrote " << files.size() << " file(s) to " << dir.string() << '\n';
  return 0;
}

// Shared front end of graph/embed/ssl/denoise: load points, build or load the graph.
struct Prepared {
  PipelineConfig cfg;
  PointCloud pc;
  WeightedGraph graph;
  json diagnostics;
};

Prepared prepare(const Options& opt) {
  Prepared p{load_pipeline(opt), {}, {}, {}};
  p.pc = load_csv(p.cfg.input);
  if (p.cfg.method == Method::Entot && !p.cfg.edges && p.pc.size() > kDenseWarnSize) {
    std::cerr << "warning: entot builds a dense " << p.pc.size() << "x" << p.pc.size()
              << " plan; memory and time grow quadratically\n";
  }
  const auto start = std::chrono::steady_clock::now();
  p.graph = p.cfg.graph_for(p.pc, &p.diagnostics);
  p.diagnostics["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (p.cfg.method) {
    p.diagnostics["method"] = to_string(*p.cfg.method);
    p.diagnostics["params"] = p.cfg.params.to_json();
  }
  p.diagnostics["nodes"] = p.graph.n;
  return p;
}

int cmd_graph(const Options& opt) {
  Prepared p = prepare(opt);
  if (!p.cfg.method) throw UsageError("graph needs a \"method\"");
  const fs::path dir = prepare_out(opt);
  save_edge_list(p.graph, dir / "graph.tsv");
  write_json({{"command", "graph"}, {"config", p.cfg.to_json()}, {"diagnostics", p.diagnostics}},
             dir / "graph.json");
  std::cout << "graph: " << p.graph.n << " nodes, " << p.graph.edges.size() << " edges -> "
            << (dir / "graph.tsv").string() << '\n';
  return 0;
}

int cmd_embed(const Options& opt) {
  Prepared p = prepare(opt);
  const fs::path dir = prepare_out(opt);
  const Embedding e = eigenmap(p.graph, p.cfg.dims);
  std::vector<std::string> columns;
  for (Index j = 0; j < p.cfg.dims; ++j) columns.push_back("v" + std::to_string(j + 2));
  save_matrix_csv(e.coords, columns, dir / "embedding.csv");
  write_json({{"command", "embed"},
              {"config", p.cfg.to_json()},
              {"graph", p.diagnostics},
              {"top_eigenvalue", e.top_eigenvalue},
              {"eigenvalues", std::vector<double>(e.eigenvalues.begin(), e.eigenvalues.end())}},
             dir / "eigenvalues.json");
  std::cout << "embedding: " << e.coords.rows() << "x" << e.coords.cols() << " -> "
            << (dir / "embedding.csv").string() << '\n';
  return 0;
}

int cmd_ssl(const Options& opt) {
  Prepared p = prepare(opt);
  const ExperimentConfig& s = p.cfg.settings;
  const Index n = p.pc.size();

  std::vector<Index> labeled;
  std::vector<int> given;
  if (p.cfg.labels) {
    IndexLabels file = load_index_labels(*p.cfg.labels);
    for (Index i : file.indices) {
      if (i >= n) throw UsageError("label index " + std::to_string(i) + " out of range");
    }
    labeled = std::move(file.indices);
    given = std::move(file.labels);
  } else {
    if (!p.pc.labels) throw UsageError("ssl needs a \"labels\" file or a label column in the input");
    SeededRng rng = SeededRng::derive(p.cfg.seed, 1);
    labeled = label_subset(p.pc, s.label_fraction, s.per_class_labels, rng);
    for (Index i : labeled) given.push_back((*p.pc.labels)[static_cast<std::size_t>(i)]);
  }
  int classes = 0;
  for (int c : given) classes = std::max(classes, c + 1);
  if (p.pc.labels) classes = std::max(classes, p.pc.num_classes());
  std::vector<int> sparse(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < labeled.size(); ++i) sparse[static_cast<std::size_t>(labeled[i])] = given[i];
  const LabelMatrix labels = LabelMatrix::from_labels(n, classes, labeled, sparse);

  const RowStochasticGraph w = row_normalize(p.graph);
  const Likelihood q = llgc_solve(w, labels, s.mu);
  const Prediction pred = predict(q);

  const fs::path dir = prepare_out(opt);
  std::vector<std::string> columns;
  for (int c = 0; c < classes; ++c) columns.push_back("c" + std::to_string(c));
  save_matrix_csv(q.q, columns, dir / "likelihood.csv");
  std::vector<Index> all(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  save_index_labels(all, pred.labels, dir / "predictions.csv");
  save_index_labels(labeled, given, dir / "labeled.csv");

  json metrics{{"labeled", labeled.size()},
               {"classes", classes},
               {"ties", pred.ties.size()},
               {"llgc_relative_gradient", llgc_relative_gradient(w, labels, s.mu, q.q)}};
  if (p.pc.labels) {
    metrics["accuracy"] = accuracy(pred.labels, *p.pc.labels, s.exclude_labeled ? labeled : std::vector<Index>{});
    metrics["exclude_labeled"] = s.exclude_labeled;
  }
  write_json({{"command", "ssl"}, {"config", p.cfg.to_json()}, {"graph", p.diagnostics}, {"metrics", metrics}},
             dir / "ssl.json");
  std::cout << "ssl: " << classes << " classes, " << labeled.size() << " labeled";
  if (metrics.contains("accuracy")) std::cout << ", accuracy " << metrics["accuracy"].get<double>();
  std::cout << '\n';
  return 0;
}

int cmd_denoise(const Options& opt) {
  Prepared p = prepare(opt);
  const RowStochasticGraph w = row_normalize(p.graph);
  const fs::path dir = prepare_out(opt);
  json files = json::array();
  for (int t : p.cfg.settings.denoise_times) {
    PointCloud out = p.pc;
    out.points = magic_denoise(w, p.pc.points, t);
    const std::string name = "denoised_t" + std::to_string(t) + ".csv";
    save_csv(out, dir / name);
    files.push_back(name);
  }
  write_json({{"command", "denoise"}, {"config", p.cfg.to_json()}, {"graph", p.diagnostics}, {"files", files}},
             dir / "denoise.json");
  std::cout << "denoise: wrote " << files.size() << " file(s) to " << dir.string() << '\n';
  return 0;
}

int cmd_sweep(const Options& opt) {
  const ExperimentConfig cfg = load_experiment(opt);
  const int jobs = resolve_jobs(opt.jobs);
  const fs::path dir = prepare_out(opt);
  const SweepResult result = run_sweep(cfg, jobs);

  std::ofstream records(dir / "results.jsonl"), timings(dir / "timings.jsonl");
  if (!records || !timings) throw Error("cannot write sweep results in " + dir.string());
  std::size_t failed = 0;
  for (const auto& r : result.records) {
    records << r.to_json().dump() << '\n';
    timings << json{{"method", r.method}, {"params", r.params}, {"variant", r.variant}, {"seed", r.seed},
                    {"wall_time_s", r.wall_time_s}}
                   .dump()
            << '\n';
    if (!r.ok()) ++failed;
  }
  if (!records || !timings) throw Error("write failed in " + dir.string());
  write_json(result.summary, dir / "summary.json");
  write_json({{"command", "sweep"}, {"jobs", jobs}, {"config", cfg.to_json()}}, dir / "manifest.json");

  std::cout << "sweep " << to_string(cfg.kind) << ": " << result.records.size() << " records, " << failed
            << " failed cell(s)\n";
  for (const auto& a : result.summary["aggregate"]) {
    std::cout << "  " << a["method"].get<std::string>();
    if (!a["variant"].empty()) std::cout << ' ' << a["variant"].dump();
    if (a.contains("mean_best")) {
      std::cout << "  mean best " << result.summary["metric"].get<std::string>() << " "
                << a["mean_best"].get<double>();
    } else {
      std::cout << "  no successful cells";
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-transport neighborhood graphs and downstream pipelines"};
  app.require_subcommand(1);
  Options opt;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Command commands[] = {
      {"generate", "Write the synthetic datasets of an experiment config", cmd_generate},
      {"graph", "Build one graph and write it as an edge list", cmd_graph},
      {"embed", "Eigenmap embedding of a graph", cmd_embed},
      {"sweep", "Run an experiment over its parameter grids and seeds", cmd_sweep},
      {"ssl", "Label propagation on a graph", cmd_ssl},
      {"denoise", "Diffusion denoising along a graph", cmd_denoise},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", opt.config, "JSON config file")->required();
    sub->add_option("--jobs", opt.jobs, "Parallel sweep cells (default: OTGRAPH_JOBS or 1)");
    sub->add_option("--seed", opt.seed, "Override the config seed(s)");
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    subs.emplace_back(sub, &c);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (opt.jobs && *opt.jobs < 1) throw UsageError("--jobs must be >= 1");
    for (const auto& [sub, cmd] : subs) {
      if (sub->parsed()) return cmd->run(opt);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
