#pragma once

#include <compare>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dagsparse {

struct Edge {
  int src = 0;
  int dst = 0;
  auto operator<=>(const Edge&) const = default;
};

class DagError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A staged directed acyclic graph. Node ids are dense integers
/// 0..node_count-1. `edges` is kept sorted; the position of an edge in
/// that vector is its edge id, used to index EdgeParams and to fix the
/// accumulation order of node aggregations.
struct DagSpec {
  int node_count = 0;
  std::vector<int> stage_of;
  std::vector<Edge> edges;
  int input_node = 0;
  int output_node = 0;

  int num_stages() const;
  std::size_t edge_count() const { return edges.size(); }

  /// Edge ids grouped by destination / source node, each list ascending.
  std::vector<std::vector<int>> in_edges() const;
  std::vector<std::vector<int>> out_edges() const;

  std::optional<int> find_edge(int src, int dst) const;

  bool operator==(const DagSpec&) const = default;
};

/// Throws DagError describing the first violated invariant.
void validate(const DagSpec& g);

/// Fully connected DAG: every pair i<j, stages as contiguous equal blocks.
DagSpec build_full_dag(int node_count, int num_stages = 3);

/// Kahn's algorithm with ties broken by smallest node id.
std::vector<int> topo_order(const DagSpec& g);

/// Trainable edge weights; the effective weight of edge e is tanh(raw[e]).
struct EdgeParams {
  std::vector<double> raw;

  double effective(std::size_t e) const;
  double magnitude(std::size_t e) const;
  std::vector<double> magnitudes() const;
  bool operator==(const EdgeParams&) const = default;
};

/// artanh(0.5), the constant initial raw weight.
double initial_raw_weight();

EdgeParams init_edge_params(const DagSpec& g);

/// Sum over edges of |tanh w_e|.
double sparsity_loss(const EdgeParams& edges);

/// Subgraph on the same nodes keeping only `edge_ids` (ids into g.edges).
DagSpec with_edges(const DagSpec& g, const std::vector<int>& edge_ids);

// DOT interchange. Nodes carry a "stage" attribute; edges carry "w", the
// signed effective weight with 6 decimals; the graph carries input/output
// plus any extra attributes given.
void write_dot(std::ostream& os, const DagSpec& g, const EdgeParams* edges = nullptr,
               const std::map<std::string, std::string>& graph_attrs = {});

struct DotGraph {
  DagSpec graph;
  std::optional<EdgeParams> edges;
  std::map<std::string, std::string> graph_attrs;
};

DotGraph read_dot(std::istream& is);

}  // namespace dagsparse
