#include "dagsparse/dag.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <queue>
#include <regex>
#include <sstream>

namespace dagsparse {

int DagSpec::num_stages() const {
  if (stage_of.empty()) return 0;
  return *std::max_element(stage_of.begin(), stage_of.end()) + 1;
}

std::vector<std::vector<int>> DagSpec::in_edges() const {
  std::vector<std::vector<int>> in(node_count);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) in[edges[e].dst].push_back(e);
  return in;
}

std::vector<std::vector<int>> DagSpec::out_edges() const {
  std::vector<std::vector<int>> out(node_count);
  for (int e = 0; e < static_cast<int>(edges.size()); ++e) out[edges[e].src].push_back(e);
  return out;
}

std::optional<int> DagSpec::find_edge(int src, int dst) const {
  auto it = std::lower_bound(edges.begin(), edges.end(), Edge{src, dst});
  if (it == edges.end() || *it != Edge{src, dst}) return std::nullopt;
  return static_cast<int>(it - edges.begin());
}

void validate(const DagSpec& g) {
  if (g.node_count < 1) throw DagError("node_count must be positive");
  if (static_cast<int>(g.stage_of.size()) != g.node_count)
    throw DagError("stage_of has " + std::to_string(g.stage_of.size()) + " entries, expected " +
                   std::to_string(g.node_count));
  for (int s : g.stage_of)
    if (s < 0) throw DagError("negative stage index");
  auto in_range = [&](int v) { return v >= 0 && v < g.node_count; };
  if (!in_range(g.input_node) || !in_range(g.output_node))
    throw DagError("input/output node out of range");
  if (!std::is_sorted(g.edges.begin(), g.edges.end()))
    throw DagError("edge list must be sorted");
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const Edge& e = g.edges[i];
    if (!in_range(e.src) || !in_range(e.dst))
      throw DagError("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                     " references a missing node");
    if (e.src == e.dst) throw DagError("self-loop on node " + std::to_string(e.src));
    if (i > 0 && g.edges[i - 1] == e)
      throw DagError("duplicate edge " + std::to_string(e.src) + "->" + std::to_string(e.dst));
    if (g.stage_of[e.src] > g.stage_of[e.dst])
      throw DagError("edge " + std::to_string(e.src) + "->" + std::to_string(e.dst) +
                     " goes from a later stage to an earlier one");
    if (e.dst == g.input_node) throw DagError("input node has an incoming edge");
    if (e.src == g.output_node) throw DagError("output node has an outgoing edge");
  }
  topo_order(g);  // throws on cycles
}

DagSpec build_full_dag(int node_count, int num_stages) {
  if (node_count < 2) throw DagError("a DAG needs at least 2 nodes, got " + std::to_string(node_count));
  if (num_stages < 1) throw DagError("num_stages must be positive");
  if (node_count % num_stages != 0)
    throw DagError(std::to_string(node_count) + " nodes cannot be split into " +
                   std::to_string(num_stages) + " equal stages");
  DagSpec g;
  g.node_count = node_count;
  g.input_node = 0;
  g.output_node = node_count - 1;
  const int per_stage = node_count / num_stages;
  g.stage_of.resize(node_count);
  for (int v = 0; v < node_count; ++v) g.stage_of[v] = v / per_stage;
  g.edges.reserve(static_cast<std::size_t>(node_count) * (node_count - 1) / 2);
  for (int i = 0; i < node_count; ++i)
    for (int j = i + 1; j < node_count; ++j) g.edges.push_back({i, j});
  return g;
}

std::vector<int> topo_order(const DagSpec& g) {
  std::vector<int> indegree(g.node_count, 0);
  std::vector<std::vector<int>> succ(g.node_count);
  for (const Edge& e : g.edges) {
    ++indegree[e.dst];
    succ[e.src].push_back(e.dst);
  }
  std::priority_queue<int, std::vector<int>, std::greater<>> ready;
  for (int v = 0; v < g.node_count; ++v)
    if (indegree[v] == 0) ready.push(v);
  std::vector<int> order;
  order.reserve(g.node_count);
  while (!ready.empty()) {
    const int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int w : succ[v])
      if (--indegree[w] == 0) ready.push(w);
  }
  if (static_cast<int>(order.size()) != g.node_count) throw DagError("graph contains a cycle");
  return order;
}

double EdgeParams::effective(std::size_t e) const { return std::tanh(raw.at(e)); }
double EdgeParams::magnitude(std::size_t e) const { return std::abs(effective(e)); }

std::vector<double> EdgeParams::magnitudes() const {
  std::vector<double> m(raw.size());
  for (std::size_t e = 0; e < raw.size(); ++e) m[e] = std::abs(std::tanh(raw[e]));
  return m;
}

double initial_raw_weight() { return std::atanh(0.5); }

EdgeParams init_edge_params(const DagSpec& g) {
  return EdgeParams{std::vector<double>(g.edges.size(), initial_raw_weight())};
}

double sparsity_loss(const EdgeParams& edges) {
  double total = 0.0;
  for (double w : edges.raw) total += std::abs(std::tanh(w));
  return total;
}

DagSpec with_edges(const DagSpec& g, const std::vector<int>& edge_ids) {
  DagSpec sub = g;
  sub.edges.clear();
  sub.edges.reserve(edge_ids.size());
  for (int e : edge_ids) sub.edges.push_back(g.edges.at(e));
  std::sort(sub.edges.begin(), sub.edges.end());
  return sub;
}

void write_dot(std::ostream& os, const DagSpec& g, const EdgeParams* edges,
               const std::map<std::string, std::string>& graph_attrs) {
  os << "digraph dag {\n";
  os << "  graph [input=\"" << g.input_node << "\", output=\"" << g.output_node << "\"";
  for (const auto& [key, value] : graph_attrs) os << ", " << key << "=\"" << value << "\"";
  os << "];\n";
  for (int v = 0; v < g.node_count; ++v) os << "  " << v << " [stage=\"" << g.stage_of[v] << "\"];\n";
  std::ostringstream w;
  w << std::fixed << std::setprecision(6);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    os << "  " << g.edges[e].src << " -> " << g.edges[e].dst;
    if (edges) {
      w.str("");
      w << edges->effective(e);
      os << " [w=\"" << w.str() << "\"]";
    }
    os << ";\n";
  }
  os << "}\n";
}

DotGraph read_dot(std::istream& is) {
  static const std::regex attr_re(R"re((\w+)\s*=\s*"?([^",\]]*)"?)re");
  static const std::regex graph_re(R"re(^\s*graph\s*\[(.*)\]\s*;?\s*$)re");
  static const std::regex node_re(R"re(^\s*(\d+)\s*(\[(.*)\])?\s*;?\s*$)re");
  static const std::regex edge_re(R"re(^\s*(\d+)\s*->\s*(\d+)\s*(\[(.*)\])?\s*;?\s*$)re");

  auto parse_attrs = [](const std::string& text) {
    std::map<std::string, std::string> attrs;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), attr_re); it != std::sregex_iterator(); ++it)
      attrs[(*it)[1]] = (*it)[2];
    return attrs;
  };

  DotGraph out;
  std::map<int, int> stages;
  std::vector<std::pair<Edge, std::optional<double>>> edges;
  std::optional<int> input, output;
  std::string line;
  bool opened = false;
  while (std::getline(is, line)) {
    std::smatch m;
    if (!opened) {
      if (line.find("digraph") != std::string::npos) opened = true;
      continue;
    }
    if (line.find('}') != std::string::npos && line.find('[') == std::string::npos) break;
    if (std::regex_match(line, m, graph_re)) {
      for (auto& [k, v] : parse_attrs(m[1])) {
        if (k == "input") input = std::stoi(v);
        else if (k == "output") output = std::stoi(v);
        else out.graph_attrs[k] = v;
      }
    } else if (std::regex_match(line, m, edge_re)) {
      Edge e{std::stoi(m[1]), std::stoi(m[2])};
      std::optional<double> w;
      auto attrs = parse_attrs(m[4]);
      if (auto it = attrs.find("w"); it != attrs.end()) w = std::stod(it->second);
      edges.emplace_back(e, w);
    } else if (std::regex_match(line, m, node_re)) {
      auto attrs = parse_attrs(m[3]);
      auto it = attrs.find("stage");
      stages[std::stoi(m[1])] = it == attrs.end() ? 0 : std::stoi(it->second);
    } else if (line.find_first_not_of(" \t\r") != std::string::npos) {
      throw DagError("unrecognized DOT line: " + line);
    }
  }
  if (!opened) throw DagError("no digraph found in DOT input");

  DagSpec& g = out.graph;
  g.node_count = stages.empty() ? 0 : stages.rbegin()->first + 1;
  if (static_cast<int>(stages.size()) != g.node_count) throw DagError("DOT node ids must be dense");
  g.stage_of.resize(g.node_count);
  for (auto& [v, s] : stages) g.stage_of[v] = s;
  g.input_node = input.value_or(0);
  g.output_node = output.value_or(g.node_count - 1);
  std::sort(edges.begin(), edges.end(), [](auto& a, auto& b) { return a.first < b.first; });
  bool all_weighted = !edges.empty();
  EdgeParams params;
  for (auto& [e, w] : edges) {
    g.edges.push_back(e);
    if (!w) all_weighted = false;
    params.raw.push_back(w ? std::atanh(*w) : 0.0);
  }
  if (all_weighted) out.edges = std::move(params);
  validate(g);
  return out;
}

}  // namespace dagsparse
