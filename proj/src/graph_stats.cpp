#include "dagsparse/graph_stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include <boost/multiprecision/cpp_int.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "dagsparse/format.hpp"
#include "dagsparse/rng.hpp"

namespace dagsparse {

namespace mp = boost::multiprecision;

namespace {

double ln_big(const BigInt& x) {
  if (x <= 0) return -std::numeric_limits<double>::infinity();
  const unsigned bits = mp::msb(x);
  if (bits < 1000) return std::log(x.convert_to<double>());
  const unsigned shift = bits - 60;
  const BigInt top = x >> shift;
  return std::log(top.convert_to<double>()) + shift * std::numbers::ln2;
}

}  // namespace

PathStats path_stats(const DagSpec& g) {
  const std::vector<int> order = topo_order(g);
  const auto in = g.in_edges();
  std::vector<BigInt> count(g.node_count, 0), length(g.node_count, 0);
  std::vector<int> longest(g.node_count, -1);
  count[g.input_node] = 1;
  longest[g.input_node] = 0;
  for (int v : order) {
    if (v == g.input_node) continue;
    for (int e : in[v]) {
      const int u = g.edges[e].src;
      if (count[u] == 0) continue;
      count[v] += count[u];
      length[v] += length[u] + count[u];
      longest[v] = std::max(longest[v], longest[u] + 1);
    }
  }
  const int out = g.output_node;
  if (count[out] == 0) throw GraphStatsError("path_stats: no input->output path");
  PathStats s;
  s.count = count[out];
  s.log_paths = ln_big(s.count);
  s.mean_path = mp::cpp_rational(length[out], count[out]).convert_to<double>();
  s.max_path = longest[out];
  return s;
}

double ln_communicability(const DagSpec& g) {
  // w_k = e_in^T A^k / k!, built one multiplication at a time.
  const auto out_edges = g.out_edges();
  std::vector<double> w(g.node_count, 0.0), next(g.node_count);
  w[g.input_node] = 1.0;
  double total = g.input_node == g.output_node ? 1.0 : 0.0;
  for (int k = 1; k <= g.node_count; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    bool any = false;
    for (int u = 0; u < g.node_count; ++u) {
      if (w[u] == 0.0) continue;
      for (int e : out_edges[u]) {
        next[g.edges[e].dst] += w[u] / k;
        any = true;
      }
    }
    w.swap(next);
    if (!any) break;
    total += w[g.output_node];
  }
  if (total <= 0.0) throw GraphStatsError("communicability is zero: output unreachable from input");
  return std::log(total);
}

double communicability_dense(const DagSpec& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.node_count, g.node_count);
  for (const Edge& e : g.edges) a(e.src, e.dst) = 1.0;
  const Eigen::MatrixXd ea = a.exp();
  return ea(g.input_node, g.output_node);
}

int edge_connectivity(const DagSpec& g) {
  const int n = g.node_count;
  if (n < 2) return 0;
  Eigen::MatrixXi w = Eigen::MatrixXi::Zero(n, n);
  for (const Edge& e : g.edges) {
    w(e.src, e.dst) += 1;
    w(e.dst, e.src) += 1;
  }
  // Stoer-Wagner minimum cut on the merged-vertex weight matrix.
  std::vector<int> vertices(n);
  for (int i = 0; i < n; ++i) vertices[i] = i;
  int best = std::numeric_limits<int>::max();
  while (vertices.size() > 1) {
    const int m = static_cast<int>(vertices.size());
    std::vector<int> key(m, 0);
    std::vector<char> added(m, 0);
    int prev = -1, last = -1;
    for (int it = 0; it < m; ++it) {
      int sel = -1;
      for (int i = 0; i < m; ++i)
        if (!added[i] && (sel < 0 || key[i] > key[sel])) sel = i;
      added[sel] = 1;
      prev = last;
      last = sel;
      if (it == m - 1) best = std::min(best, key[sel]);
      for (int i = 0; i < m; ++i)
        if (!added[i]) key[i] += w(vertices[sel], vertices[i]);
    }
    const int s = vertices[prev], t = vertices[last];
    for (int i = 0; i < n; ++i) {
      w(s, i) += w(t, i);
      w(i, s) = w(s, i);
    }
    w(s, s) = 0;
    vertices.erase(vertices.begin() + last);
  }
  return best;
}

double mean_degree(const DagSpec& g) {
  if (g.node_count == 0) return 0.0;
  return 2.0 * static_cast<double>(g.edges.size()) / g.node_count;
}

Eigen::MatrixXi undirected_distances(const DagSpec& g) {
  const int n = g.node_count;
  std::vector<std::vector<int>> adj(n);
  for (const Edge& e : g.edges) {
    adj[e.src].push_back(e.dst);
    adj[e.dst].push_back(e.src);
  }
  Eigen::MatrixXi d = Eigen::MatrixXi::Constant(n, n, -1);
  for (int s = 0; s < n; ++s) {
    std::queue<int> q;
    q.push(s);
    d(s, s) = 0;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      for (int w : adj[v])
        if (d(s, w) < 0) {
          d(s, w) = d(s, v) + 1;
          q.push(w);
        }
    }
  }
  return d;
}

double kk_stress(const Eigen::MatrixX2d& x, const Eigen::MatrixXi& dist) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
      const double d = dist(i, j);
      const double r = (x.row(i) - x.row(j)).norm() - d;
      s += r * r / (2.0 * d * d);
    }
  return s;
}

namespace {

Layout majorize(const Eigen::MatrixXi& dist, Eigen::MatrixX2d x, const Eigen::MatrixXd& lplus,
                const LayoutOptions& opt, std::vector<double>* trace) {
  const Eigen::Index n = x.rows();
  Layout out;
  double stress = kk_stress(x, dist);
  if (trace) trace->push_back(stress);
  Eigen::MatrixXd b(n, n);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    b.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double norm = (x.row(i) - x.row(j)).norm();
        if (norm <= 0.0) continue;
        const double d = dist(i, j);
        b(i, j) = -(1.0 / (d * d)) * d / norm;
      }
    b.diagonal() = -b.rowwise().sum();
    Eigen::MatrixX2d next = lplus * (b * x);
    const double next_stress = kk_stress(next, dist);
    if (next_stress > stress) break;  // only accept descent steps
    const double change = stress > 0.0 ? (stress - next_stress) / stress : 0.0;
    x = next;
    stress = next_stress;
    if (trace) trace->push_back(stress);
    if (change < opt.tolerance) {
      ++it;
      break;
    }
  }
  out.coords = x;
  out.stress = stress;
  out.iterations = it;
  return out;
}

}  // namespace

Layout kamada_kawai_embed(const DagSpec& g, std::uint64_t seed, const LayoutOptions& opt) {
  const int n = g.node_count;
  if (n == 0) throw GraphStatsError("cannot embed an empty graph");
  const Eigen::MatrixXi dist = undirected_distances(g);
  if ((dist.array() < 0).any()) throw GraphStatsError("cannot embed a disconnected graph");
  if (n == 1) return {Eigen::MatrixX2d::Zero(1, 2), 0.0, 0};

  // Weighted Laplacian of w_ij = 1/d_ij^2 and its pseudo-inverse.
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j) lap(i, j) = -1.0 / (static_cast<double>(dist(i, j)) * dist(i, j));
  lap.diagonal() = -lap.rowwise().sum();
  const Eigen::MatrixXd jn = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const Eigen::MatrixXd lplus = (lap + jn).inverse() - jn;

  const double radius = std::max(1.0, dist.maxCoeff() / 2.0);
  Layout best;
  best.stress = std::numeric_limits<double>::infinity();
  for (int r = 0; r < std::max(1, opt.restarts); ++r) {
    Rng rng(derive_seed(seed, "kamada-kawai", static_cast<std::uint64_t>(r)));
    std::vector<int> slot(n);
    for (int i = 0; i < n; ++i) slot[i] = i;
    if (r > 0) rng.shuffle(std::span(slot));
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    Eigen::MatrixX2d x(n, 2);
    for (int i = 0; i < n; ++i) {
      const double angle = phase + 2.0 * std::numbers::pi * slot[i] / n;
      const double rr = radius * (1.0 + 0.01 * rng.uniform(-1.0, 1.0));
      x(i, 0) = rr * std::cos(angle);
      x(i, 1) = rr * std::sin(angle);
    }
    Layout l = majorize(dist, x, lplus, opt, r == 0 ? opt.stress_trace : nullptr);
    if (l.stress < best.stress) best = std::move(l);
  }
  return best;
}

Elongation pca_elongation(const Eigen::MatrixX2d& coords) {
  if (coords.rows() < 2) throw GraphStatsError("pca_elongation needs at least two points");
  const Eigen::MatrixX2d centered = coords.rowwise() - coords.colwise().mean();
  const Eigen::Matrix2d cov = centered.transpose() * centered / static_cast<double>(coords.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0);
  const double total = ev.sum();
  const double scale = centered.cwiseAbs().maxCoeff();
  if (total <= 0.0 || scale == 0.0 || total <= 1e-24 * scale * scale) return {0.0, true};
  return {2.0 * ev.maxCoeff() / total - 1.0, false};
}

bool q1d(double pca_elongation, int edge_connectivity) {
  return pca_elongation > 0.25 && edge_connectivity > 1;
}

GraphFeatures compute_features(const PrunedGraph& pg, const DagSpec& original, std::int64_t parameters,
                               std::uint64_t seed) {
  if (pg.disconnected || !has_input_output_path(pg.graph))
    throw GraphStatsError("graph characteristics are undefined for a disconnected graph");
  GraphFeatures f;
  f.sparsity_all = sparsity(pg, original);
  const auto stage_sp = per_stage_sparsity(pg, original);
  const auto stage_nodes = nodes_per_stage(pg, original);
  for (int s = 0; s < 3; ++s) {
    f.sparsity_stage[s] = s < static_cast<int>(stage_sp.size()) && stage_sp[s]
                              ? *stage_sp[s]
                              : std::numeric_limits<double>::quiet_NaN();
    f.nodes_stage[s] = s < static_cast<int>(stage_nodes.size()) ? stage_nodes[s] : 0;
  }
  f.nodes_all = pg.graph.node_count;
  f.parameters = parameters;
  const PathStats ps = path_stats(pg.graph);
  f.log_paths = ps.log_paths;
  f.mean_path = ps.mean_path;
  f.max_path = ps.max_path;
  f.ln_communicability = ln_communicability(pg.graph);
  const int ec = edge_connectivity(pg.graph);
  f.edge_connectivity = ec;
  f.mean_degree = mean_degree(pg.graph);
  f.pca_elongation = pca_elongation(kamada_kawai_embed(pg.graph, seed).coords).value;
  f.q1d = q1d(f.pca_elongation, ec);
  return f;
}

std::string features_csv_header() {
  return "sparsity_all,sparsity_stage0,sparsity_stage1,sparsity_stage2,nodes_all,nodes_stage0,nodes_stage1,"
         "nodes_stage2,parameters,log_paths_ln,mean_path_edges,max_path_edges,ln_communicability,"
         "edge_connectivity,mean_degree,pca_elongation,q1d";
}

std::string features_csv_row(const GraphFeatures& f) {
  std::ostringstream os;
  os << fmt6(f.sparsity_all);
  for (double s : f.sparsity_stage) os << ',' << fmt6(s);
  os << ',' << f.nodes_all;
  for (int n : f.nodes_stage) os << ',' << n;
  os << ',' << f.parameters << ',' << fmt6(f.log_paths) << ',' << fmt6(f.mean_path) << ',' << fmt6(f.max_path) << ','
     << fmt6(f.ln_communicability) << ',' << fmt6(f.edge_connectivity) << ',' << fmt6(f.mean_degree) << ','
     << fmt6(f.pca_elongation) << ',' << (f.q1d ? 1 : 0);
  return os.str();
}

std::vector<std::string> similarity_feature_names() {
  return {"sparsity_all",   "sparsity_stage0", "sparsity_stage1",    "sparsity_stage2",   "nodes_all",
          "nodes_stage0",   "nodes_stage1",    "nodes_stage2",       "log_paths_ln",      "mean_path_edges",
          "max_path_edges", "ln_communicability", "edge_connectivity", "mean_degree",       "pca_elongation"};
}

std::vector<double> similarity_feature_vector(const GraphFeatures& f) {
  return {f.sparsity_all,
          f.sparsity_stage[0],
          f.sparsity_stage[1],
          f.sparsity_stage[2],
          static_cast<double>(f.nodes_all),
          static_cast<double>(f.nodes_stage[0]),
          static_cast<double>(f.nodes_stage[1]),
          static_cast<double>(f.nodes_stage[2]),
          f.log_paths,
          f.mean_path,
          f.max_path,
          f.ln_communicability,
          f.edge_connectivity,
          f.mean_degree,
          f.pca_elongation};
}

}  // namespace dagsparse
