#include "dagsparse/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace dagsparse {

std::vector<int> threshold_edges(const DagSpec& g, const EdgeParams& edges, double tau) {
  if (edges.raw.size() != g.edges.size()) throw DagError("edge weights do not match the graph");
  std::vector<int> kept;
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    if (!(edges.magnitude(e) < tau)) kept.push_back(static_cast<int>(e));
  return kept;
}

PrunedGraph excise_dead_paths(const DagSpec& g, const std::vector<int>& kept_edges, double tau) {
  const int n = g.node_count;
  std::vector<char> edge_alive(g.edges.size(), 0);
  for (int e : kept_edges) edge_alive.at(e) = 1;
  std::vector<int> indeg(n, 0), outdeg(n, 0);
  std::vector<std::vector<int>> in(n), out(n);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (!edge_alive[e]) continue;
    const Edge& ed = g.edges[e];
    ++outdeg[ed.src];
    ++indeg[ed.dst];
    out[ed.src].push_back(static_cast<int>(e));
    in[ed.dst].push_back(static_cast<int>(e));
  }

  // Kahn-style worklist: every interior node that reaches degree zero on
  // either side is removed and its neighbours re-examined.
  std::vector<char> removed(n, 0);
  auto interior = [&](int v) { return v != g.input_node && v != g.output_node; };
  std::deque<int> work;
  for (int v = 0; v < n; ++v)
    if (interior(v) && (indeg[v] == 0 || outdeg[v] == 0)) work.push_back(v);
  while (!work.empty()) {
    const int v = work.front();
    work.pop_front();
    if (removed[v]) continue;
    removed[v] = 1;
    for (int e : out[v]) {
      if (!edge_alive[e]) continue;
      edge_alive[e] = 0;
      const int w = g.edges[e].dst;
      if (--indeg[w] == 0 && interior(w) && !removed[w]) work.push_back(w);
    }
    for (int e : in[v]) {
      if (!edge_alive[e]) continue;
      edge_alive[e] = 0;
      const int u = g.edges[e].src;
      if (--outdeg[u] == 0 && interior(u) && !removed[u]) work.push_back(u);
    }
  }

  PrunedGraph pg;
  pg.tau = tau;
  std::vector<int> new_id(n, -1);
  for (int v = 0; v < n; ++v) {
    if (removed[v]) continue;
    new_id[v] = static_cast<int>(pg.node_map.size());
    pg.node_map.push_back(v);
  }
  DagSpec& sub = pg.graph;
  sub.node_count = static_cast<int>(pg.node_map.size());
  for (int v : pg.node_map) sub.stage_of.push_back(g.stage_of[v]);
  sub.input_node = new_id[g.input_node];
  sub.output_node = new_id[g.output_node];
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    if (!edge_alive[e]) continue;
    pg.retained_edges.push_back(static_cast<int>(e));
    sub.edges.push_back({new_id[g.edges[e].src], new_id[g.edges[e].dst]});
  }
  // node_map is increasing, so the mapped edge list is still sorted.
  pg.disconnected = !has_input_output_path(sub);
  return pg;
}

PrunedGraph prune(const DagSpec& g, const EdgeParams& edges, double tau) {
  return excise_dead_paths(g, threshold_edges(g, edges, tau), tau);
}

namespace {

std::vector<char> reach(const DagSpec& g, int start, bool forward) {
  std::vector<std::vector<int>> adj(g.node_count);
  for (const Edge& e : g.edges) {
    if (forward)
      adj[e.src].push_back(e.dst);
    else
      adj[e.dst].push_back(e.src);
  }
  std::vector<char> seen(g.node_count, 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
  }
  return seen;
}

}  // namespace

bool has_input_output_path(const DagSpec& g) {
  if (g.node_count == 0) return false;
  return reach(g, g.input_node, true)[g.output_node] != 0;
}

std::vector<bool> on_input_output_path(const DagSpec& g) {
  const auto from_in = reach(g, g.input_node, true);
  const auto to_out = reach(g, g.output_node, false);
  std::vector<bool> on(g.node_count);
  for (int v = 0; v < g.node_count; ++v) on[v] = from_in[v] && to_out[v];
  return on;
}

double sparsity(const PrunedGraph& pg, const DagSpec& original) {
  if (original.edges.empty()) return 0.0;
  return 1.0 - static_cast<double>(pg.retained_edges.size()) / static_cast<double>(original.edges.size());
}

std::vector<std::optional<double>> per_stage_sparsity(const PrunedGraph& pg, const DagSpec& original) {
  const int stages = original.num_stages();
  std::vector<int> total(stages, 0), kept(stages, 0);
  for (const Edge& e : original.edges)
    if (original.stage_of[e.src] == original.stage_of[e.dst]) ++total[original.stage_of[e.src]];
  for (int id : pg.retained_edges) {
    const Edge& e = original.edges.at(id);
    if (original.stage_of[e.src] == original.stage_of[e.dst]) ++kept[original.stage_of[e.src]];
  }
  std::vector<std::optional<double>> out(stages);
  for (int s = 0; s < stages; ++s)
    if (total[s] > 0) out[s] = 1.0 - static_cast<double>(kept[s]) / total[s];
  return out;
}

std::vector<int> nodes_per_stage(const PrunedGraph& pg, const DagSpec& original) {
  std::vector<int> count(original.num_stages(), 0);
  for (int v : pg.node_map) ++count[original.stage_of[v]];
  return count;
}

EdgeParams retained_weights(const PrunedGraph& pg, const EdgeParams& edges) {
  EdgeParams out;
  out.raw.reserve(pg.retained_edges.size());
  for (int e : pg.retained_edges) out.raw.push_back(edges.raw.at(e));
  return out;
}

std::vector<double> default_tau_grid() {
  std::vector<double> taus;
  for (int i = 1; i <= 12; ++i) taus.push_back(i * 0.001);
  return taus;
}

}  // namespace dagsparse
