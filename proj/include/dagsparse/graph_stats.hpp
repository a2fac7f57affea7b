#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include "dagsparse/dag.hpp"
#include "dagsparse/pruner.hpp"

namespace dagsparse {

class GraphStatsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using BigInt = boost::multiprecision::cpp_int;

struct PathStats {
  BigInt count;          // number of distinct input->output paths
  double log_paths = 0;  // natural log of count
  double mean_path = 0;  // mean path length in edges
  int max_path = 0;      // longest path in edges
};

/// Exact path statistics by dynamic programming over a topological order.
PathStats path_stats(const DagSpec& g);

/// ln [exp(A)]_{input,output} via the finite series sum_k (A^k)_{in,out}/k!,
/// which terminates because A is nilpotent on a DAG.
double ln_communicability(const DagSpec& g);

/// The same entry through a general dense matrix exponential.
double communicability_dense(const DagSpec& g);

/// Global edge connectivity of the underlying undirected graph (Stoer-Wagner).
int edge_connectivity(const DagSpec& g);

/// 2|E|/|V| on the underlying undirected graph.
double mean_degree(const DagSpec& g);

/// Unweighted shortest-path distances in the underlying undirected graph;
/// -1 marks unreachable pairs.
Eigen::MatrixXi undirected_distances(const DagSpec& g);

struct Layout {
  Eigen::MatrixX2d coords;
  double stress = 0;
  int iterations = 0;
};

/// Kamada-Kawai stress sum_{i<j} (|x_i - x_j| - d_ij)^2 / (2 d_ij^2).
double kk_stress(const Eigen::MatrixX2d& coords, const Eigen::MatrixXi& dist);

struct LayoutOptions {
  int restarts = 3;
  int max_iterations = 10000;
  double tolerance = 1e-9;  // relative stress change
  std::vector<double>* stress_trace = nullptr;  // filled for the first restart
};

/// Kamada-Kawai layout minimized by stress majorization from a seeded
/// circular start; the lowest-stress of `restarts` runs is returned.
Layout kamada_kawai_embed(const DagSpec& g, std::uint64_t seed, const LayoutOptions& opt = {});

struct Elongation {
  double value = 0;
  bool degenerate = false;  // all points coincide
};

/// 2 * (explained variance ratio of the first principal axis) - 1.
Elongation pca_elongation(const Eigen::MatrixX2d& coords);

bool q1d(double pca_elongation, int edge_connectivity);

/// Structural and graph characteristics of one pruned network.
struct GraphFeatures {
  double sparsity_all = 0;
  std::array<double, 3> sparsity_stage{};  // NaN when a stage has no internal edges
  int nodes_all = 0;
  std::array<int, 3> nodes_stage{};
  std::int64_t parameters = 0;
  double log_paths = 0;
  double mean_path = 0;
  double max_path = 0;
  double ln_communicability = 0;
  double edge_connectivity = 0;
  double mean_degree = 0;
  double pca_elongation = 0;
  bool q1d = false;
};

/// Throws GraphStatsError if the pruned graph is disconnected.
GraphFeatures compute_features(const PrunedGraph& pg, const DagSpec& original, std::int64_t parameters,
                               std::uint64_t seed);

/// CSV header in GraphFeatures field order (log base e, path lengths in edges).
std::string features_csv_header();
std::string features_csv_row(const GraphFeatures& f);

/// Features for similarity analysis: every field except parameters and q1d.
std::vector<std::string> similarity_feature_names();
std::vector<double> similarity_feature_vector(const GraphFeatures& f);

}  // namespace dagsparse
