#include "otgraph/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

namespace otgraph {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kArcLengthSteps = 100000;

// Inverts a cumulative arc-length table sampled on a uniform t grid.
double invert_arc_length(const std::vector<double>& cumulative, double t_lo, double dt, double s) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), s);
  std::size_t k = it == cumulative.begin() ? 0 : static_cast<std::size_t>(it - cumulative.begin()) - 1;
  k = std::min(k, cumulative.size() - 2);
  const double seg = cumulative[k + 1] - cumulative[k];
  const double frac = seg > 0.0 ? (s - cumulative[k]) / seg : 0.0;
  return t_lo + dt * (static_cast<double>(k) + frac);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

int PointCloud::num_classes() const {
  if (!labels || labels->empty()) return 0;
  return *std::max_element(labels->begin(), labels->end()) + 1;
}

void PointCloud::validate() const {
  if (!points.allFinite()) throw ParameterError("PointCloud: non-finite coordinate");
  if (params && params->size() != size()) throw ParameterError("PointCloud: params length != N");
  if (labels) {
    if (static_cast<Index>(labels->size()) != size()) throw ParameterError("PointCloud: labels length != N");
    for (int l : *labels) {
      if (l < 0) throw ParameterError("PointCloud: negative label");
    }
  }
}

double hetero_noise_magnitude(double t) { return 0.05 + 0.95 * (1.0 + std::cos(6.0 * t)) / 2.0; }

double ssl_noise_magnitude(double t) {
  const double s = std::sin(3.0 * t);
  return 1.0 - (s * s) * (s * s);
}

Eigen::Vector3d closed_spiral_point(double t) {
  return {std::cos(t) * (0.5 * std::cos(6.0 * t) + 1.0), std::sin(t) * (0.4 * std::cos(6.0 * t) + 1.0),
          0.4 * std::sin(6.0 * t)};
}

Eigen::Vector3d closed_spiral_tangent(double t) {
  const double c = std::cos(t), s = std::sin(t);
  const double c6 = std::cos(6.0 * t), s6 = std::sin(6.0 * t);
  return {-s * (0.5 * c6 + 1.0) - 3.0 * c * s6, c * (0.4 * c6 + 1.0) - 2.4 * s * s6, 2.4 * c6};
}

PointCloud closed_spiral(Index n) {
  if (n < 3) throw ParameterError("closed_spiral: need n >= 3, got " + std::to_string(n));

  const double dt = kTwoPi / kArcLengthSteps;
  std::vector<double> cumulative(kArcLengthSteps + 1, 0.0);
  double prev = closed_spiral_tangent(0.0).norm();
  for (int k = 1; k <= kArcLengthSteps; ++k) {
    const double cur = closed_spiral_tangent(dt * k).norm();
    cumulative[k] = cumulative[k - 1] + 0.5 * dt * (prev + cur);
    prev = cur;
  }
  const double total = cumulative.back();

  PointCloud pc;
  pc.points.resize(n, 3);
  pc.params = Vector(n);
  for (Index i = 0; i < n; ++i) {
    const double s = total * static_cast<double>(i) / static_cast<double>(n);
    const double t = invert_arc_length(cumulative, 0.0, dt, s);
    (*pc.params)[i] = t;
    pc.points.row(i) = closed_spiral_point(t).transpose();
  }
  return pc;
}

PointCloud embed_with_noise(const PointCloud& pc, SeededRng& rng, Index ambient,
                            const std::function<double(double)>& magnitude, DenseMatrix* basis) {
  if (!pc.params) throw UsageError("embed: point cloud has no curve parameters");
  const Index n = pc.size();
  const DenseMatrix r = orthonormal_columns(rng, ambient, pc.dim());
  if (basis) *basis = r;

  PointCloud out;
  out.points = pc.points * r.transpose();
  out.params = pc.params;
  out.labels = pc.labels;
  Vector z(ambient);
  for (Index i = 0; i < n; ++i) {
    double norm = 0.0;
    do {
      for (Index d = 0; d < ambient; ++d) z[d] = rng.gaussian();
      norm = z.norm();
    } while (norm == 0.0);
    out.points.row(i) += (magnitude((*pc.params)[i]) / norm) * z.transpose();
  }
  return out;
}

PointCloud embed_hetero_noise(const PointCloud& pc, SeededRng& rng, Index ambient) {
  return embed_with_noise(pc, rng, ambient, hetero_noise_magnitude);
}

PointCloud embed_ssl_noise(const PointCloud& pc, SeededRng& rng, Index ambient) {
  return embed_with_noise(pc, rng, ambient, ssl_noise_magnitude);
}

double normalization_factor(const PointCloud& pc) {
  const Index n = pc.size();
  if (n < 2) throw ParameterError("normalize_scale: need at least 2 points");
  // sum_ij ||x_i - x_j||^2 = 2 N sum_i ||x_i - mean||^2
  const Eigen::RowVectorXd mean = pc.points.colwise().mean();
  const double spread = (pc.points.rowwise() - mean).squaredNorm();
  const double mean_sq = 2.0 * spread / static_cast<double>(n);
  if (!(mean_sq > 0.0)) throw DegenerateInputError("normalize_scale: all points coincide");
  return 1.0 / std::sqrt(mean_sq);
}

PointCloud normalize_scale(const PointCloud& pc) {
  const double factor = normalization_factor(pc);
  PointCloud out = pc;
  out.points *= factor;
  return out;
}

double planar_spiral_arc_length(double t) {
  return 0.5 * (t * std::sqrt(1.0 + t * t) + std::asinh(t));
}

PointCloud multi_arm_spiral(int arms, int per_arm, double t0, double t1, ArmSpacing spacing,
                            SeededRng& rng) {
  if (arms < 1) throw ParameterError("multi_arm_spiral: arms must be >= 1");
  if (per_arm < 1) throw ParameterError("multi_arm_spiral: per_arm must be >= 1");
  if (!(t0 > 0.0) || !(t1 > t0)) throw ParameterError("multi_arm_spiral: need t1 > t0 > 0");

  // Parameter values shared by all arms for arc-uniform spacing.
  std::vector<double> shared;
  if (spacing == ArmSpacing::ArcUniform) {
    const double s0 = planar_spiral_arc_length(t0), s1 = planar_spiral_arc_length(t1);
    for (int i = 0; i < per_arm; ++i) {
      const double frac = per_arm == 1 ? 0.5 : static_cast<double>(i) / (per_arm - 1);
      const double target = s0 + frac * (s1 - s0);
      // ds/dt = sqrt(1 + t^2) > 0, so Newton from the linear guess converges.
      double t = t0 + frac * (t1 - t0);
      for (int it = 0; it < 50; ++it) {
        const double step = (planar_spiral_arc_length(t) - target) / std::sqrt(1.0 + t * t);
        t -= step;
        if (std::abs(step) < 1e-15 * std::max(1.0, t)) break;
      }
      shared.push_back(t);
    }
  }

  const Index n = static_cast<Index>(arms) * per_arm;
  PointCloud pc;
  pc.points.resize(n, 2);
  pc.params = Vector(n);
  pc.labels = std::vector<int>(static_cast<std::size_t>(n));
  Index row = 0;
  for (int k = 0; k < arms; ++k) {
    const double theta = kTwoPi * k / arms;
    const double ct = std::cos(theta), st = std::sin(theta);
    std::vector<double> ts = shared;
    if (spacing == ArmSpacing::ParamRandom) {
      ts.resize(static_cast<std::size_t>(per_arm));
      for (double& t : ts) t = rng.uniform(t0, t1);
      std::sort(ts.begin(), ts.end());
    }
    for (double t : ts) {
      const double bx = t * std::cos(t), by = t * std::sin(t);
      pc.points(row, 0) = ct * bx - st * by;
      pc.points(row, 1) = st * bx + ct * by;
      (*pc.params)[row] = t;
      (*pc.labels)[static_cast<std::size_t>(row)] = k;
      ++row;
    }
  }
  return pc;
}

DenseMatrix pairwise_sq_distances(const DenseMatrix& points) {
  const Index n = points.rows();
  DenseMatrix d2 = DenseMatrix::Zero(n, n);
  // Row-major copy keeps each point contiguous.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x = points;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double v = (x.row(i) - x.row(j)).squaredNorm();
      d2(i, j) = v;
      d2(j, i) = v;
    }
  }
  return d2;
}

CostMatrix pairwise_cost(const PointCloud& pc, double p, bool self_mass_allowed) {
  if (!(p > 0.0) || !std::isfinite(p)) throw ParameterError("pairwise_cost: p must be positive");
  CostMatrix cost;
  cost.p = p;
  cost.self_mass_allowed = self_mass_allowed;
  cost.c = pairwise_sq_distances(pc.points);
  if (p != 2.0) {
    const double half = p / 2.0;
    cost.c = cost.c.unaryExpr([half](double v) { return std::pow(v, half); });
  }
  if (!self_mass_allowed) cost.c.diagonal().setConstant(std::numeric_limits<double>::infinity());
  return cost;
}

std::vector<Index> label_subset(const PointCloud& pc, double fraction, bool per_class, SeededRng& rng) {
  if (!(fraction > 0.0) || fraction > 1.0) throw ParameterError("label_subset: fraction must lie in (0, 1]");
  if (!pc.labels) throw UsageError("label_subset: point cloud has no labels");

  auto take = [&](std::vector<Index>& pool, std::vector<Index>& out) {
    // Fisher-Yates prefix shuffle, then keep the prefix.
    const double want = std::ceil(fraction * static_cast<double>(pool.size()) - 1e-9);
    const std::size_t count = std::clamp<std::size_t>(static_cast<std::size_t>(want), 1, pool.size());
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
    }
    out.insert(out.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
  };

  std::vector<Index> chosen;
  if (per_class) {
    const int classes = pc.num_classes();
    std::vector<std::vector<Index>> pools(static_cast<std::size_t>(classes));
    for (Index i = 0; i < pc.size(); ++i) pools[static_cast<std::size_t>((*pc.labels)[static_cast<std::size_t>(i)])].push_back(i);
    for (auto& pool : pools) {
      if (!pool.empty()) take(pool, chosen);
    }
  } else {
    std::vector<Index> pool(static_cast<std::size_t>(pc.size()));
    for (Index i = 0; i < pc.size(); ++i) pool[static_cast<std::size_t>(i)] = i;
    take(pool, chosen);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

void save_csv(const PointCloud& pc, const std::filesystem::path& path) {
  pc.validate();
  std::ofstream out(path);
  if (!out) throw Error("save_csv: cannot open " + path.string() + " for writing");
  for (Index d = 0; d < pc.dim(); ++d) out << (d ? "," : "") << 'x' << d;
  if (pc.params) out << ",param";
  if (pc.labels) out << ",label";
  out << '\n';
  for (Index i = 0; i < pc.size(); ++i) {
    for (Index d = 0; d < pc.dim(); ++d) out << (d ? "," : "") << format_double(pc.points(i, d));
    if (pc.params) out << ',' << format_double((*pc.params)[i]);
    if (pc.labels) out << ',' << (*pc.labels)[static_cast<std::size_t>(i)];
    out << '\n';
  }
  if (!out) throw Error("save_csv: write failed for " + path.string());
}

PointCloud load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);

  auto split = [](const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
  };
  auto strip = [](std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && s[b] == ' ') ++b;
    return s.substr(b);
  };

  std::string line;
  if (!std::getline(in, line) || strip(line).empty()) throw ParseError("empty file (missing header)", 1);
  const auto header = split(strip(line));
  int dims = 0, param_col = -1, label_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = strip(header[c]);
    if (name == "param") {
      param_col = static_cast<int>(c);
    } else if (name == "label") {
      label_col = static_cast<int>(c);
    } else if (name == "x" + std::to_string(dims) && param_col < 0 && label_col < 0) {
      ++dims;
    } else {
      throw ParseError("unexpected header column '" + name + "'", 1);
    }
  }
  if (dims == 0) throw ParseError("header names no coordinate columns", 1);

  std::vector<double> coords, params;
  std::vector<int> labels;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip(line);
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) {
      throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()), line_no);
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const std::string f = strip(fields[c]);
      if (static_cast<int>(c) == label_col) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || ptr != f.data() + f.size() || v < 0) {
          throw ParseError("invalid label '" + f + "'", line_no);
        }
        labels.push_back(v);
        continue;
      }
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || f.empty() || !std::isfinite(v)) {
        throw ParseError("non-numeric field '" + f + "' in column " + std::to_string(c), line_no);
      }
      if (static_cast<int>(c) == param_col) {
        params.push_back(v);
      } else {
        coords.push_back(v);
      }
    }
  }
  const Index n = static_cast<Index>(coords.size()) / dims;
  if (n == 0) throw ParseError("no data rows", line_no);

  PointCloud pc;
  pc.points.resize(n, dims);
  for (Index i = 0; i < n; ++i) {
    for (Index d = 0; d < dims; ++d) pc.points(i, d) = coords[static_cast<std::size_t>(i * dims + d)];
  }
  if (param_col >= 0) pc.params = Eigen::Map<Vector>(params.data(), n);
  if (label_col >= 0) pc.labels = std::move(labels);
  return pc;
}

void save_matrix_csv(const DenseMatrix& m, const std::vector<std::string>& columns,
                     const std::filesystem::path& path) {
  if (static_cast<Index>(columns.size()) != m.cols()) throw ParameterError("save_matrix_csv: column count mismatch");
  std::ofstream out(path);
  if (!out) throw Error("save_matrix_csv: cannot open " + path.string() + " for writing");
  for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
  out << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
  if (!out) throw Error("save_matrix_csv: write failed for " + path.string());
}

void save_index_labels(const std::vector<Index>& indices, const std::vector<int>& labels,
                       const std::filesystem::path& path) {
  if (indices.size() != labels.size()) throw ParameterError("save_index_labels: length mismatch");
  std::ofstream out(path);
  if (!out) throw Error("save_index_labels: cannot open " + path.string() + " for writing");
  out << "index,label\n";
  for (std::size_t i = 0; i < indices.size(); ++i) out << indices[i] << ',' << labels[i] << '\n';
  if (!out) throw Error("save_index_labels: write failed for " + path.string());
}

IndexLabels load_index_labels(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file (missing header)", 1);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
  if (line != "index,label") throw ParseError("expected header 'index,label'", 1);
  IndexLabels out;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("expected 2 fields", line_no);
    long long index = 0;
    int label = 0;
    const char* end = line.data() + line.size();
    auto r1 = std::from_chars(line.data(), line.data() + comma, index);
    auto r2 = std::from_chars(line.data() + comma + 1, end, label);
    if (r1.ec != std::errc() || r1.ptr != line.data() + comma || r2.ec != std::errc() || r2.ptr != end ||
        index < 0 || label < 0) {
      throw ParseError("invalid index,label row '" + line + "'", line_no);
    }
    out.indices.push_back(static_cast<Index>(index));
    out.labels.push_back(label);
  }
  return out;
}

}  // namespace otgraph
