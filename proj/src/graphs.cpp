#include "otgraph/graphs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

namespace otgraph {

namespace {

void sort_edges(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end(),
            [](const Edge& a, const Edge& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
}

// Unique (i < j) pairs from per-node neighbor lists.
std::vector<std::pair<Index, Index>> union_pairs(const NeighborTable& nt, Index k) {
  std::vector<std::pair<Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(nt.size() * k));
  for (Index i = 0; i < nt.size(); ++i) {
    for (Index j : nt.nearest(i, k)) pairs.emplace_back(std::min(i, j), std::max(i, j));
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

void require_epsilon(double epsilon, const char* where) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ParameterError(std::string(where) + ": epsilon must be positive and finite");
  }
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

SparseMatrix WeightedGraph::adjacency() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * edges.size() + self_weights.size());
  for (const Edge& e : edges) {
    triplets.emplace_back(e.i, e.j, e.w);
    triplets.emplace_back(e.j, e.i, e.w);
  }
  for (std::size_t i = 0; i < self_weights.size(); ++i) {
    if (self_weights[i] > 0.0) triplets.emplace_back(static_cast<Index>(i), static_cast<Index>(i), self_weights[i]);
  }
  SparseMatrix a(n, n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

std::vector<Index> WeightedGraph::degrees() const {
  std::vector<Index> deg(static_cast<std::size_t>(n), 0);
  for (const Edge& e : edges) {
    ++deg[static_cast<std::size_t>(e.i)];
    ++deg[static_cast<std::size_t>(e.j)];
  }
  return deg;
}

Vector WeightedGraph::weighted_degrees() const {
  Vector deg = Vector::Zero(n);
  for (const Edge& e : edges) {
    deg[e.i] += e.w;
    deg[e.j] += e.w;
  }
  for (std::size_t i = 0; i < self_weights.size(); ++i) deg[static_cast<Index>(i)] += self_weights[i];
  return deg;
}

int WeightedGraph::component_count() const {
  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  auto find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  int components = static_cast<int>(n);
  for (const Edge& e : edges) {
    const Index a = find(e.i), b = find(e.j);
    if (a != b) {
      parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
      --components;
    }
  }
  return components;
}

void WeightedGraph::validate() const {
  if (!self_weights.empty() && static_cast<Index>(self_weights.size()) != n) {
    throw ParameterError("WeightedGraph: self_weights length != n");
  }
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const Edge& e = edges[k];
    if (e.i < 0 || e.j >= n || e.i >= e.j) throw ParameterError("WeightedGraph: edge indices must satisfy 0 <= i < j < n");
    if (!(e.w > 0.0) || !std::isfinite(e.w)) throw ParameterError("WeightedGraph: weights must be finite and positive");
    if (k > 0) {
      const Edge& p = edges[k - 1];
      if (p.i > e.i || (p.i == e.i && p.j >= e.j)) throw ParameterError("WeightedGraph: edges unsorted or duplicated");
    }
  }
}

WeightedGraph WeightedGraph::from_symmetric(const SparseMatrix& w, bool keep_self) {
  WeightedGraph g;
  g.n = w.rows();
  if (keep_self) g.self_weights.assign(static_cast<std::size_t>(g.n), 0.0);
  for (Index k = 0; k < w.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(w, k); it; ++it) {
      if (!(it.value() > kWeightFloor)) continue;
      if (it.row() < it.col()) {
        g.edges.push_back({it.row(), it.col(), it.value()});
      } else if (it.row() == it.col() && keep_self) {
        g.self_weights[static_cast<std::size_t>(it.row())] = it.value();
      }
    }
  }
  sort_edges(g.edges);
  return g;
}

NeighborTable::NeighborTable(DenseMatrix sq_distances) : d2_(std::move(sq_distances)) {
  if (d2_.rows() != d2_.cols()) throw ParameterError("NeighborTable: distance matrix not square");
}

std::vector<Index> NeighborTable::nearest(Index i, Index k) const {
  const Index n = size();
  if (k < 1 || k > n - 1) {
    throw ParameterError("nearest neighbors: need 1 <= k <= N-1, got k=" + std::to_string(k));
  }
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(n - 1));
  for (Index j = 0; j < n; ++j) {
    if (j != i) idx.push_back(j);
  }
  const double* row = d2_.col(i).data();  // symmetric
  auto closer = [row](Index a, Index b) { return row[a] != row[b] ? row[a] < row[b] : a < b; };
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), closer);
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

WeightedGraph knn_gaussian(const NeighborTable& nt, Index k, double epsilon) {
  require_epsilon(epsilon, "knn_gaussian");
  WeightedGraph g;
  g.n = nt.size();
  for (const auto& [i, j] : union_pairs(nt, k)) {
    const double w = std::exp(-nt.sq_distances()(i, j) / epsilon);
    if (w > kWeightFloor) g.edges.push_back({i, j, w});
  }
  return g;
}

WeightedGraph knn_gaussian(const PointCloud& pc, Index k, double epsilon) {
  return knn_gaussian(NeighborTable(pc), k, epsilon);
}

WeightedGraph gaussian_full(const NeighborTable& nt, double epsilon) {
  require_epsilon(epsilon, "gaussian_full");
  WeightedGraph g;
  g.n = nt.size();
  g.edges.reserve(static_cast<std::size_t>(g.n * (g.n - 1) / 2));
  for (Index i = 0; i < g.n; ++i) {
    for (Index j = i + 1; j < g.n; ++j) {
      const double w = std::exp(-nt.sq_distances()(i, j) / epsilon);
      if (w > kWeightFloor) g.edges.push_back({i, j, w});
    }
  }
  return g;
}

WeightedGraph gaussian_full(const PointCloud& pc, double epsilon) {
  return gaussian_full(NeighborTable(pc), epsilon);
}

Vector magic_bandwidths(const NeighborTable& nt, Index ka) {
  const Index n = nt.size();
  Vector sigma(n);
  for (Index i = 0; i < n; ++i) {
    const Index kth = nt.nearest(i, ka).back();
    double s2 = nt.sq_distances()(i, kth);
    if (s2 == 0.0) {
      // Duplicates: fall back to the smallest positive neighbor distance.
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < n; ++j) {
        const double d = nt.sq_distances()(i, j);
        if (j != i && d > 0.0) best = std::min(best, d);
      }
      if (!std::isfinite(best)) throw DegenerateInputError("magic_adaptive: all points coincide");
      s2 = best;
    }
    sigma[i] = std::sqrt(s2);
  }
  return sigma;
}

WeightedGraph magic_adaptive(const NeighborTable& nt, Index ka) {
  const Index n = nt.size();
  if (ka < 1 || ka > n - 1) throw ParameterError("magic_adaptive: need 1 <= ka <= N-1");
  const Vector sigma = magic_bandwidths(nt, ka);
  const Index candidates = std::min(3 * ka, n - 1);
  WeightedGraph g;
  g.n = n;
  for (const auto& [i, j] : union_pairs(nt, candidates)) {
    const double d2 = nt.sq_distances()(i, j);
    const double w = 0.5 * (std::exp(-d2 / (sigma[i] * sigma[i])) + std::exp(-d2 / (sigma[j] * sigma[j])));
    if (w > kWeightFloor) g.edges.push_back({i, j, w});
  }
  return g;
}

WeightedGraph magic_adaptive(const PointCloud& pc, Index ka) { return magic_adaptive(NeighborTable(pc), ka); }

WeightedGraph plan_to_graph(const TransportPlan& plan, bool drop_self) {
  return WeightedGraph::from_symmetric(plan.pi, !drop_self);
}

RowStochasticGraph row_normalize(const WeightedGraph& g) {
  const Vector deg = g.weighted_degrees();
  std::vector<Index> isolated;
  for (Index i = 0; i < g.n; ++i) {
    if (!(deg[i] > 0.0)) isolated.push_back(i);
  }
  if (!isolated.empty()) {
    std::ostringstream msg;
    msg << "row_normalize: " << isolated.size() << " isolated node(s):";
    for (std::size_t k = 0; k < isolated.size() && k < 20; ++k) msg << ' ' << isolated[k];
    if (isolated.size() > 20) msg << " ...";
    throw GraphError(msg.str());
  }
  RowStochasticGraph out;
  out.w = g.adjacency();
  for (Index i = 0; i < out.w.outerSize(); ++i) {
    double sum = 0.0;
    for (decltype(out.w)::InnerIterator it(out.w, i); it; ++it) sum += it.value();
    for (decltype(out.w)::InnerIterator it(out.w, i); it; ++it) it.valueRef() /= sum;
  }
  return out;
}

void save_edge_list(const WeightedGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("save_edge_list: cannot open " + path.string() + " for writing");
  out << "# n=" << g.n << " sym=1\n";
  std::vector<Edge> rows = g.edges;
  for (std::size_t i = 0; i < g.self_weights.size(); ++i) {
    if (g.self_weights[i] > 0.0) rows.push_back({static_cast<Index>(i), static_cast<Index>(i), g.self_weights[i]});
  }
  sort_edges(rows);
  for (const Edge& e : rows) out << e.i << '\t' << e.j << '\t' << format_double(e.w) << '\n';
  if (!out) throw Error("save_edge_list: write failed for " + path.string());
}

WeightedGraph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty edge list", 1);
  WeightedGraph g;
  {
    long long n = -1;
    int sym = -1;
    if (std::sscanf(line.c_str(), "# n=%lld sym=%d", &n, &sym) != 2 || n < 0 || sym != 1) {
      throw ParseError("expected header '# n=<N> sym=1'", 1);
    }
    g.n = static_cast<Index>(n);
  }
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string fi, fj, fw, extra;
    if (!std::getline(ss, fi, '\t') || !std::getline(ss, fj, '\t') || !std::getline(ss, fw, '\t') ||
        std::getline(ss, extra, '\t')) {
      throw ParseError("expected 'i<TAB>j<TAB>weight'", line_no);
    }
    long long i = 0, j = 0;
    double w = 0.0;
    auto bad = [&](const std::string& f, auto& v) {
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      return ec != std::errc() || p != f.data() + f.size();
    };
    if (bad(fi, i) || bad(fj, j) || bad(fw, w)) throw ParseError("non-numeric field", line_no);
    if (i < 0 || j >= g.n || i > j) throw ParseError("edge index out of range or i > j", line_no);
    if (!(w > 0.0) || !std::isfinite(w)) throw ParseError("weight must be finite and positive", line_no);
    if (i == j) {
      if (g.self_weights.empty()) g.self_weights.assign(static_cast<std::size_t>(g.n), 0.0);
      g.self_weights[static_cast<std::size_t>(i)] = w;
    } else {
      g.edges.push_back({static_cast<Index>(i), static_cast<Index>(j), w});
    }
  }
  sort_edges(g.edges);
  try {
    g.validate();
  } catch (const ParameterError& e) {
    throw ParseError(e.what(), 0);
  }
  return g;
}

DegreeStats degree_stats(const WeightedGraph& g) {
  DegreeStats s;
  const auto deg = g.degrees();
  if (deg.empty()) return s;
  s.min = *std::min_element(deg.begin(), deg.end());
  s.max = *std::max_element(deg.begin(), deg.end());
  double sum = 0.0, sq = 0.0;
  for (Index d : deg) {
    sum += static_cast<double>(d);
    sq += static_cast<double>(d) * static_cast<double>(d);
  }
  const double n = static_cast<double>(deg.size());
  s.mean = sum / n;
  s.stddev = std::sqrt(std::max(0.0, sq / n - s.mean * s.mean));
  return s;
}

}  // namespace otgraph
