#include "dagsparse/network.hpp"

#include <algorithm>

namespace dagsparse {

std::vector<int> reduce_depths(const DagSpec& g) {
  std::vector<int> depth(g.node_count, 0);
  for (const Edge& e : g.edges)
    depth[e.src] = std::max(depth[e.src], g.stage_of[e.dst] - g.stage_of[e.src]);
  return depth;
}

void check_resolution(const DagSpec& g, const NetConfig& cfg) {
  int res = cfg.input_resolution;
  for (int s = 1; s < g.num_stages(); ++s) {
    if (res < 2 || res % 2 != 0)
      throw NetworkError("stage " + std::to_string(s) + " cannot halve resolution " + std::to_string(res) +
                         " (input " + std::to_string(cfg.input_resolution) + ")");
    res /= 2;
  }
}

std::vector<ParamShape> parameter_shapes(const DagSpec& g, const NetConfig& cfg) {
  const auto p = detail::allocate<float>(g, cfg);
  std::vector<ParamShape> shapes;
  for (std::size_t i = 0; i < p.tensors.size(); ++i)
    shapes.push_back({p.names[i], static_cast<int>(p.tensors[i].rows()), static_cast<int>(p.tensors[i].cols())});
  return shapes;
}

std::int64_t param_count(const DagSpec& g, const NetConfig& cfg) {
  const std::int64_t k2 = static_cast<std::int64_t>(cfg.kernel_size) * cfg.kernel_size;
  const std::vector<int> depths = reduce_depths(g);
  std::int64_t total = 0;
  for (int v = 0; v < g.node_count; ++v) {
    const std::int64_t c = cfg.channels_at(g.stage_of[v]);
    if (v == g.input_node)
      total += k2 * cfg.input_channels * c + c;
    else
      total += k2 * c * c + c + 2 * c + c * c;  // conv + bias, norm affine, 1x1 residual
    for (int k = 0; k < depths[v]; ++k) {
      const std::int64_t cin = cfg.channels_at(g.stage_of[v] + k);
      total += 9 * cin * 2 * cin + 2 * 2 * cin;
    }
  }
  const std::int64_t head_in = cfg.channels_at(g.stage_of[g.output_node]);
  return total + head_in * cfg.num_classes + cfg.num_classes;
}

ChannelFit fit_channels(const DagSpec& g, NetConfig cfg, std::int64_t target_params) {
  auto count = [&](int c) {
    cfg.base_channels = c;
    return param_count(g, cfg);
  };
  if (count(1) > target_params) return {1, false};
  int lo = 1, hi = 2;
  while (count(hi) <= target_params) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > 1) {
    const int mid = lo + (hi - lo) / 2;
    (count(mid) <= target_params ? lo : hi) = mid;
  }
  return {lo, true};
}

}  // namespace dagsparse
