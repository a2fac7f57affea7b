#pragma once

#include <stdexcept>
#include <vector>

#include "dagsparse/pruner.hpp"
#include "dagsparse/trainer.hpp"

namespace dagsparse {

struct SweepPoint {
  double tau = 0;
  double sparsity = 0;
  double accuracy = 0;
  PrunedGraph pruned;
};

/// Network parameters and edge weights of `full` carried over to a pruned
/// graph, ready for evaluation without fine-tuning.
template <typename Scalar>
std::pair<NetworkParams<Scalar>, Matrix<Scalar>> restrict_to(const PrunedGraph& pg, const DagSpec& g,
                                                             const NetworkParams<Scalar>& params,
                                                             const EdgeParams& edges, const NetConfig& cfg) {
  return {restrict_params(params, g, pg.graph, pg.node_map, cfg), edge_matrix<Scalar>(retained_weights(pg, edges))};
}

/// Eval-mode test accuracy of the pruned graph for each threshold.
template <typename Scalar>
std::vector<SweepPoint> sweep(const DagSpec& g, const EdgeParams& edges, const NetworkParams<Scalar>& params,
                              const NetConfig& cfg, const Dataset& data, const std::vector<double>& taus) {
  if (!std::is_sorted(taus.begin(), taus.end())) throw std::invalid_argument("sweep thresholds must be ascending");
  std::vector<SweepPoint> points;
  for (double tau : taus) {
    SweepPoint pt;
    pt.tau = tau;
    pt.pruned = prune(g, edges, tau);
    pt.sparsity = sparsity(pt.pruned, g);
    auto [sub_params, sub_edges] = restrict_to(pt.pruned, g, params, edges, cfg);
    pt.accuracy = evaluate_accuracy(pt.pruned.graph, cfg, sub_params, sub_edges, data, data.test);
    points.push_back(std::move(pt));
  }
  return points;
}

}  // namespace dagsparse
