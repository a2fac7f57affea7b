#pragma once

#include <optional>
#include <vector>

#include "dagsparse/dag.hpp"

namespace dagsparse {

/// Subgraph left after thresholding and dead-path excision. Node v of
/// `graph` is node node_map[v] of the original; retained_edges are ids into
/// the original edge list, ascending, aligned with graph.edges.
struct PrunedGraph {
  DagSpec graph;
  std::vector<int> node_map;
  std::vector<int> retained_edges;
  double tau = 0.0;
  bool disconnected = false;

  bool operator==(const PrunedGraph&) const = default;
};

/// Ids of edges with |tanh w_e| >= tau.
std::vector<int> threshold_edges(const DagSpec& g, const EdgeParams& edges, double tau);

/// Repeatedly removes interior nodes with zero in- or out-degree (with their
/// edges) until none remain; input and output are never removed.
PrunedGraph excise_dead_paths(const DagSpec& g, const std::vector<int>& kept_edges, double tau = 0.0);

/// threshold_edges followed by excise_dead_paths.
PrunedGraph prune(const DagSpec& g, const EdgeParams& edges, double tau);

bool has_input_output_path(const DagSpec& g);

/// Nodes lying on some input->output path.
std::vector<bool> on_input_output_path(const DagSpec& g);

/// 1 - retained/original edge count.
double sparsity(const PrunedGraph& pg, const DagSpec& original);

/// Per stage s: 1 - (retained edges inside s)/(original edges inside s).
/// Empty when stage s had no internal edges. Cross-stage edges only count
/// toward overall sparsity.
std::vector<std::optional<double>> per_stage_sparsity(const PrunedGraph& pg, const DagSpec& original);

/// Retained node count per stage, indexed by original stage.
std::vector<int> nodes_per_stage(const PrunedGraph& pg, const DagSpec& original);

/// The original edge weights restricted to the retained edges.
EdgeParams retained_weights(const PrunedGraph& pg, const EdgeParams& edges);

/// Default threshold and sweep grid.
inline constexpr double kDefaultTau = 0.006;
std::vector<double> default_tau_grid();

}  // namespace dagsparse
