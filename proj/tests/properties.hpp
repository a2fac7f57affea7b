#pragma once

// Randomized pruning cases checked against brute-force references.

#include <algorithm>
#include <string>
#include <vector>

#include "dagsparse/network.hpp"
#include "dagsparse/pruner.hpp"
#include "oracles.hpp"

namespace props {

using namespace dagsparse;

struct PruneCase {
  DagSpec graph;
  EdgeParams weights;
  double tau = 0;
};

inline PruneCase random_prune_case(Rng& rng, int max_nodes = 12) {
  PruneCase c;
  const int n = 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_nodes - 2)));
  c.graph = oracle::random_dag(rng, n, rng.uniform(0.3, 0.9));
  for (std::size_t e = 0; e < c.graph.edges.size(); ++e) {
    const double small = rng.uniform(-0.08, 0.08), big = rng.uniform(-2.0, 2.0);
    c.weights.raw.push_back(rng.uniform() < 0.5 ? small : big);
  }
  c.tau = rng.uniform(0.0, 0.06);
  return c;
}

struct PruneReport {
  bool idempotent = true;
  bool order_independent = true;
  bool matches_reference = true;
  bool path_preserving = true;
  bool monotone = true;
  std::string failure;

  bool ok() const { return idempotent && order_independent && matches_reference && path_preserving && monotone; }
};

inline PruneReport check_prune_case(const PruneCase& c, Rng& rng) {
  PruneReport r;
  const PrunedGraph pg = prune(c.graph, c.weights, c.tau);
  const std::vector<int> kept = threshold_edges(c.graph, c.weights, c.tau);

  // Pruning the pruned graph again changes nothing.
  const PrunedGraph again = prune(pg.graph, retained_weights(pg, c.weights), c.tau);
  if (again.graph != pg.graph || again.retained_edges.size() != pg.retained_edges.size()) {
    r.idempotent = false;
    r.failure = "second excision changed the graph";
  }

  // The order in which surviving edges are listed is irrelevant.
  std::vector<int> shuffled = kept;
  rng.shuffle(std::span(shuffled));
  if (excise_dead_paths(c.graph, shuffled, c.tau) != pg) {
    r.order_independent = false;
    r.failure = "excision depends on edge order";
  }

  // Surviving nodes are exactly the ones on an input->output path.
  const DagSpec thresholded = with_edges(c.graph, kept);
  const auto live = oracle::live_nodes(thresholded);
  const bool connected = live[c.graph.input_node] != 0;
  if (pg.disconnected == connected) {
    r.matches_reference = false;
    r.failure = "disconnection flag disagrees with reachability";
  }
  if (connected) {
    std::vector<int> expect;
    for (int v = 0; v < c.graph.node_count; ++v)
      if (live[v]) expect.push_back(v);
    if (pg.node_map != expect) {
      r.matches_reference = false;
      r.failure = "surviving nodes differ from the reachability reference";
    }
  }

  // Every input->output path of the thresholded graph survives.
  const auto before = oracle::enumerate_paths(thresholded);
  const auto after = oracle::enumerate_paths(pg.graph);
  if (before.count != after.count || before.total_length != after.total_length) {
    r.path_preserving = false;
    r.failure = "paths lost or gained by excision";
  }

  // A larger threshold never yields a denser graph.
  const double tau2 = c.tau + rng.uniform(0.0, 0.05);
  const PrunedGraph pg2 = prune(c.graph, c.weights, tau2);
  const bool subset = std::includes(pg.retained_edges.begin(), pg.retained_edges.end(), pg2.retained_edges.begin(),
                                    pg2.retained_edges.end());
  if (sparsity(pg2, c.graph) < sparsity(pg, c.graph) || !subset) {
    r.monotone = false;
    r.failure = "sparsity decreased with a larger threshold";
  }
  return r;
}

// Max |logit difference| between the pruned network and the full network
// whose sub-threshold edge weights are clamped to zero.
inline double pruned_vs_clamped(const PruneCase& c, Rng& rng) {
  NetConfig cfg;
  cfg.base_channels = 2;
  cfg.input_resolution = 4;
  cfg.input_channels = 2;
  cfg.num_classes = 3;
  NetworkParams<float> params = build_network<float>(c.graph, cfg, rng.next());
  for (auto& n : params.norms) {
    for (Eigen::Index i = 0; i < n.running_mean.size(); ++i) {
      n.running_mean(i) = static_cast<float>(rng.uniform(-0.5, 0.5));
      n.running_var(i) = static_cast<float>(rng.uniform(0.5, 2.0));
    }
  }
  Matrix<float> x(2, 2 * 16);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.uniform(-1, 1));
  const Tensor<float> batch(x, 2, 4, 4);

  const PrunedGraph pg = prune(c.graph, c.weights, c.tau);
  EdgeParams clamped = c.weights;
  const auto kept = threshold_edges(c.graph, c.weights, c.tau);
  std::vector<char> keep(c.graph.edges.size(), 0);
  for (int e : kept) keep[e] = 1;
  for (std::size_t e = 0; e < clamped.raw.size(); ++e)
    if (!keep[e]) clamped.raw[e] = 0.0;

  const Matrix<float> full = predict(c.graph, cfg, params, edge_matrix<float>(clamped), batch);
  NetworkParams<float> sub = restrict_params(params, c.graph, pg.graph, pg.node_map, cfg);
  const Matrix<float> pruned = predict(pg.graph, cfg, sub, edge_matrix<float>(retained_weights(pg, c.weights)), batch);
  return static_cast<double>((full - pruned).cwiseAbs().maxCoeff());
}

}  // namespace props
