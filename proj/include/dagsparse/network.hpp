#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dagsparse/autograd.hpp"
#include "dagsparse/dag.hpp"
#include "dagsparse/rng.hpp"
#include "dagsparse/tensor.hpp"

namespace dagsparse {

class NetworkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical blow-up inside forward(); the message names the node.
class NumericError : public NetworkError {
 public:
  using NetworkError::NetworkError;
};

struct NetConfig {
  int base_channels = 11;
  int input_resolution = 32;
  int input_channels = 3;
  int num_classes = 10;
  int kernel_size = 3;
  double norm_momentum = 0.1;
  double norm_eps = 1e-5;

  int channels_at(int stage) const { return base_channels << stage; }
  int resolution_at(int stage) const { return input_resolution >> stage; }
  bool operator==(const NetConfig&) const = default;
};

enum class Mode { Train, Eval };

// Reduce blocks use a fixed 3x3 stride-2 convolution.
inline constexpr ConvGeometry kReduceGeometry{3, 2, 1};

// Parameter id under which the (E x 1) raw edge-weight vector is recorded.
inline constexpr int kEdgeParamId = 1 << 30;

inline void validate(const NetConfig& cfg) {
  if (cfg.base_channels < 1 || cfg.input_resolution < 1 || cfg.input_channels < 1 || cfg.num_classes < 1)
    throw NetworkError("net config values must be positive");
  if (cfg.kernel_size < 1 || cfg.kernel_size % 2 == 0) throw NetworkError("kernel_size must be odd and positive");
}

/// Number of reduce steps node u needs: the largest stage gap over its
/// outgoing edges. A node's chain is shared by all its cross-stage edges;
/// the edge to stage t reads the output of step t - stage(u).
std::vector<int> reduce_depths(const DagSpec& g);

/// Throws NetworkError naming the first stage whose resolution underflows.
void check_resolution(const DagSpec& g, const NetConfig& cfg);

struct ParamShape {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool operator==(const ParamShape&) const = default;
};

template <typename Scalar>
struct NetworkParams {
  struct NodeBlock {
    int conv_w = -1, conv_b = -1, gamma = -1, beta = -1, residual = -1, norm = -1;
  };
  struct ReduceStep {
    int conv_w = -1, gamma = -1, beta = -1, norm = -1;
  };

  std::vector<Matrix<Scalar>> tensors;
  std::vector<std::string> names;
  std::vector<NormState<Scalar>> norms;
  std::vector<NodeBlock> nodes;  // the input node's conv_w/conv_b form the stem
  std::vector<std::vector<ReduceStep>> reduce;
  int head_w = -1;
  int head_b = -1;

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
    return n;
  }
  bool operator==(const NetworkParams& o) const {
    return tensors == o.tensors && names == o.names && norms == o.norms;
  }
};

/// Canonical parameter layout for (g, cfg), in allocation order.
std::vector<ParamShape> parameter_shapes(const DagSpec& g, const NetConfig& cfg);

/// Closed-form number of scalar parameters, edge weights excluded.
std::int64_t param_count(const DagSpec& g, const NetConfig& cfg);

struct ChannelFit {
  int channels = 1;
  bool reachable = true;  // false when even C = 1 exceeds the target
};

/// Largest C with param_count(g, C) <= target_params.
ChannelFit fit_channels(const DagSpec& g, NetConfig cfg, std::int64_t target_params);

namespace detail {

template <typename Scalar>
NetworkParams<Scalar> allocate(const DagSpec& g, const NetConfig& cfg) {
  NetworkParams<Scalar> p;
  p.nodes.resize(g.node_count);
  p.reduce.resize(g.node_count);
  auto add = [&](const std::string& name, int rows, int cols) {
    p.tensors.push_back(Matrix<Scalar>::Zero(rows, cols));
    p.names.push_back(name);
    return static_cast<int>(p.tensors.size()) - 1;
  };
  auto add_norm = [&](int channels) {
    p.norms.emplace_back(channels);
    return static_cast<int>(p.norms.size()) - 1;
  };
  const int k2 = cfg.kernel_size * cfg.kernel_size;
  const std::vector<int> depths = reduce_depths(g);
  for (int v = 0; v < g.node_count; ++v) {
    const std::string tag = "node" + std::to_string(v);
    const int c = cfg.channels_at(g.stage_of[v]);
    auto& b = p.nodes[v];
    if (v == g.input_node) {
      b.conv_w = add(tag + ".stem_w", c, k2 * cfg.input_channels);
      b.conv_b = add(tag + ".stem_b", c, 1);
    } else {
      b.conv_w = add(tag + ".conv_w", c, k2 * c);
      b.conv_b = add(tag + ".conv_b", c, 1);
      b.gamma = add(tag + ".norm_scale", c, 1);
      b.beta = add(tag + ".norm_shift", c, 1);
      b.residual = add(tag + ".residual_w", c, c);
      b.norm = add_norm(c);
    }
    for (int k = 0; k < depths[v]; ++k) {
      const int cin = cfg.channels_at(g.stage_of[v] + k);
      const std::string rtag = "reduce" + std::to_string(v) + "." + std::to_string(k);
      typename NetworkParams<Scalar>::ReduceStep step;
      step.conv_w = add(rtag + ".conv_w", 2 * cin, 9 * cin);
      step.gamma = add(rtag + ".norm_scale", 2 * cin, 1);
      step.beta = add(rtag + ".norm_shift", 2 * cin, 1);
      step.norm = add_norm(2 * cin);
      p.reduce[v].push_back(step);
    }
  }
  const int head_in = cfg.channels_at(g.stage_of[g.output_node]);
  p.head_w = add("head.w", cfg.num_classes, head_in);
  p.head_b = add("head.b", cfg.num_classes, 1);
  return p;
}

template <typename Scalar>
void fill_uniform(Matrix<Scalar>& m, double bound, std::uint64_t seed) {
  Rng rng(seed);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
}

}  // namespace detail

/// Allocates and initializes every network parameter. Weights and biases
/// draw from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), where fan_in is the column
/// count of the layer's weight; norms start at unit scale and zero shift.
/// Each tensor draws from a stream derived from `seed` and its name.
template <typename Scalar>
NetworkParams<Scalar> build_network(const DagSpec& g, const NetConfig& cfg, std::uint64_t seed) {
  validate(g);
  validate(cfg);
  check_resolution(g, cfg);
  NetworkParams<Scalar> p = detail::allocate<Scalar>(g, cfg);
  for (std::size_t i = 0; i < p.tensors.size(); ++i) {
    const std::string& name = p.names[i];
    auto ends_with = [&](std::string_view suffix) {
      return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    Matrix<Scalar>& t = p.tensors[i];
    const std::uint64_t s = derive_seed(seed, name);
    if (ends_with("norm_scale")) {
      t.setOnes();
    } else if (ends_with("norm_shift")) {
      t.setZero();
    } else {
      const bool bias = ends_with("_b") || ends_with(".b");
      const std::string weight = bias ? name.substr(0, name.size() - 1) + "w" : name;
      const auto it = std::find(p.names.begin(), p.names.end(), weight);
      const double fan_in = static_cast<double>(p.tensors[it - p.names.begin()].cols());
      detail::fill_uniform(t, 1.0 / std::sqrt(fan_in), s);
    }
  }
  return p;
}

/// Checks every tensor against the canonical layout for (g, cfg).
template <typename Scalar>
bool shape_audit(const NetworkParams<Scalar>& p, const DagSpec& g, const NetConfig& cfg) {
  const auto shapes = parameter_shapes(g, cfg);
  if (shapes.size() != p.tensors.size()) return false;
  for (std::size_t i = 0; i < shapes.size(); ++i)
    if (shapes[i].name != p.names[i] || shapes[i].rows != p.tensors[i].rows() || shapes[i].cols != p.tensors[i].cols())
      return false;
  return true;
}

/// Lazily registers parameter tensors as tape leaves.
template <typename Scalar>
class ParamBinder {
 public:
  ParamBinder(Tape<Scalar>& tape, NetworkParams<Scalar>& params)
      : tape_(tape), params_(params), vars_(params.tensors.size()) {}

  Var<Scalar> operator()(int id) {
    if (!vars_[id].valid()) vars_[id] = tape_.parameter(id, Tensor<Scalar>(params_.tensors[id]));
    return vars_[id];
  }
  NetworkParams<Scalar>& params() { return params_; }

 private:
  Tape<Scalar>& tape_;
  NetworkParams<Scalar>& params_;
  std::vector<Var<Scalar>> vars_;
};

/// Applies `steps` reduce steps ([stride-2 conv doubling channels -> norm]
/// each) to x.
template <typename Scalar>
Var<Scalar> reduce_block(Var<Scalar> x, std::span<const typename NetworkParams<Scalar>::ReduceStep> steps,
                         ParamBinder<Scalar>& bind, Mode mode, const NetConfig& cfg) {
  for (const auto& step : steps) {
    const auto& xv = x.value();
    if (xv.height < 2 || xv.height % 2 != 0 || xv.width % 2 != 0)
      throw NetworkError("reduce block: resolution " + std::to_string(xv.height) + "x" + std::to_string(xv.width) +
                         " is not divisible by the stride");
    Var<Scalar> y = conv2d(x, bind(step.conv_w), Var<Scalar>{}, kReduceGeometry);
    x = batch_norm(y, bind(step.gamma), bind(step.beta), bind.params().norms[step.norm], mode == Mode::Train,
                   static_cast<Scalar>(cfg.norm_momentum), static_cast<Scalar>(cfg.norm_eps));
  }
  return x;
}

template <typename Scalar>
struct ForwardResult {
  Var<Scalar> logits;
  std::vector<bool> active;
};

/// Records the network on `tape`. A non-input node is active when at least
/// one in-edge comes from an active node with nonzero effective weight;
/// inactive nodes output exactly zero, so a removed edge and a zero raw
/// weight are indistinguishable. If the output node is inactive the head
/// sees zero features and returns its bias.
template <typename Scalar>
ForwardResult<Scalar> forward(Tape<Scalar>& tape, const DagSpec& g, const NetConfig& cfg,
                              NetworkParams<Scalar>& params, Var<Scalar> edge_raw, const Tensor<Scalar>& batch,
                              Mode mode) {
  if (batch.channels() != cfg.input_channels || batch.height != cfg.input_resolution ||
      batch.width != cfg.input_resolution)
    throw NetworkError("batch shape does not match the network config");
  if (edge_raw.value().data.rows() != static_cast<Eigen::Index>(g.edges.size()))
    throw NetworkError("edge weight vector does not match the graph");
  const bool train = mode == Mode::Train;
  const auto momentum = static_cast<Scalar>(cfg.norm_momentum);
  const auto eps = static_cast<Scalar>(cfg.norm_eps);
  const int pad = cfg.kernel_size / 2;
  const ConvGeometry node_geo{cfg.kernel_size, 1, pad};
  const ConvGeometry pointwise{1, 1, 0};

  ParamBinder<Scalar> bind(tape, params);
  const auto in = g.in_edges();
  const auto& raw = edge_raw.value().data;
  std::vector<std::optional<Var<Scalar>>> out(g.node_count);
  std::vector<std::vector<Var<Scalar>>> reduced(g.node_count);
  std::vector<bool> active(g.node_count, false);

  auto check = [&](Var<Scalar> v, int node) {
    if (!v.value().data.allFinite())
      throw NumericError("non-finite activation at node " + std::to_string(node));
  };
  auto source_at = [&](int u, int target_stage) -> Var<Scalar> {
    const int gap = target_stage - g.stage_of[u];
    if (gap == 0) return *out[u];
    auto& chain = reduced[u];
    const auto& steps = params.reduce[u];
    while (static_cast<int>(chain.size()) < gap) {
      Var<Scalar> prev = chain.empty() ? *out[u] : chain.back();
      const std::size_t k = chain.size();
      chain.push_back(reduce_block<Scalar>(prev, std::span(steps).subspan(k, 1), bind, mode, cfg));
      check(chain.back(), u);
    }
    return chain[gap - 1];
  };

  for (int v : topo_order(g)) {
    const auto& block = params.nodes[v];
    if (v == g.input_node) {
      Var<Scalar> x = tape.constant(batch);
      out[v] = conv2d(x, bind(block.conv_w), bind(block.conv_b), node_geo);
      active[v] = true;
      check(*out[v], v);
      continue;
    }
    std::vector<int> ids;
    std::vector<Var<Scalar>> inputs;
    for (int e : in[v]) {
      const int u = g.edges[e].src;
      if (!active[u] || std::tanh(raw(e, 0)) == Scalar(0)) continue;
      ids.push_back(e);
      inputs.push_back(source_at(u, g.stage_of[v]));
    }
    if (ids.empty()) continue;
    active[v] = true;
    Var<Scalar> a = aggregate<Scalar>(edge_raw, ids, inputs);
    Var<Scalar> h = conv2d(relu(a), bind(block.conv_w), bind(block.conv_b), node_geo);
    h = batch_norm(h, bind(block.gamma), bind(block.beta), params.norms[block.norm], train, momentum, eps);
    out[v] = h + conv2d(a, bind(block.residual), Var<Scalar>{}, pointwise);
    check(*out[v], v);
  }

  Var<Scalar> pooled;
  if (active[g.output_node]) {
    pooled = global_avg_pool(*out[g.output_node]);
  } else {
    const int c = cfg.channels_at(g.stage_of[g.output_node]);
    pooled = tape.constant(Tensor<Scalar>(Matrix<Scalar>::Zero(c, batch.batch), batch.batch, 1, 1));
  }
  Var<Scalar> logits = linear(pooled, bind(params.head_w), bind(params.head_b));
  check(logits, g.output_node);
  return {logits, std::move(active)};
}

/// Eval-mode logits (classes x batch) without recording gradients.
template <typename Scalar>
Matrix<Scalar> predict(const DagSpec& g, const NetConfig& cfg, NetworkParams<Scalar>& params,
                       const Matrix<Scalar>& edge_raw, const Tensor<Scalar>& batch) {
  Tape<Scalar> tape(false);
  Var<Scalar> raw = tape.constant(Tensor<Scalar>(edge_raw));
  return forward(tape, g, cfg, params, raw, batch, Mode::Eval).logits.value().data;
}

template <typename Scalar>
Matrix<Scalar> edge_matrix(const EdgeParams& edges) {
  Matrix<Scalar> m(edges.raw.size(), 1);
  for (std::size_t e = 0; e < edges.raw.size(); ++e) m(e, 0) = static_cast<Scalar>(edges.raw[e]);
  return m;
}

template <typename Scalar>
EdgeParams to_edge_params(const Matrix<Scalar>& m) {
  EdgeParams p;
  p.raw.resize(m.rows());
  for (Eigen::Index e = 0; e < m.rows(); ++e) p.raw[e] = static_cast<double>(m(e, 0));
  return p;
}

/// Parameters of `full` (built for `full_graph`) carried over to a subgraph
/// whose node v corresponds to full node node_map[v]. Every block, norm
/// state and reduce step the subgraph uses is copied.
template <typename Scalar>
NetworkParams<Scalar> restrict_params(const NetworkParams<Scalar>& full, const DagSpec& full_graph,
                                      const DagSpec& sub, const std::vector<int>& node_map, const NetConfig& cfg) {
  NetworkParams<Scalar> p = detail::allocate<Scalar>(sub, cfg);
  auto copy = [&](int dst, int src) {
    if (dst < 0) return;
    if (src < 0 || p.tensors[dst].rows() != full.tensors[src].rows() ||
        p.tensors[dst].cols() != full.tensors[src].cols())
      throw NetworkError("restrict_params: incompatible layouts for " + p.names[dst]);
    p.tensors[dst] = full.tensors[src];
  };
  for (int v = 0; v < sub.node_count; ++v) {
    const int o = node_map.at(v);
    if (sub.stage_of[v] != full_graph.stage_of[o]) throw NetworkError("restrict_params: stage mismatch");
    if ((v == sub.input_node) != (o == full_graph.input_node))
      throw NetworkError("restrict_params: input node mismatch");
    const auto& d = p.nodes[v];
    const auto& s = full.nodes[o];
    copy(d.conv_w, s.conv_w);
    copy(d.conv_b, s.conv_b);
    copy(d.gamma, s.gamma);
    copy(d.beta, s.beta);
    copy(d.residual, s.residual);
    if (d.norm >= 0) p.norms[d.norm] = full.norms.at(s.norm);
    for (std::size_t k = 0; k < p.reduce[v].size(); ++k) {
      const auto& rd = p.reduce[v][k];
      const auto& rs = full.reduce[o].at(k);
      copy(rd.conv_w, rs.conv_w);
      copy(rd.gamma, rs.gamma);
      copy(rd.beta, rs.beta);
      p.norms[rd.norm] = full.norms[rs.norm];
    }
  }
  copy(p.head_w, full.head_w);
  copy(p.head_b, full.head_b);
  return p;
}

}  // namespace dagsparse
