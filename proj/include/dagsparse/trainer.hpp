#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "dagsparse/datasets.hpp"
#include "dagsparse/network.hpp"
#include "dagsparse/pruner.hpp"

namespace dagsparse {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  int epochs = 100;
  double lr = 0.1;
  double momentum = 0.9;
  int batch_size = 128;
  double weight_decay = 1e-4;
  std::vector<int> lr_drop_epochs{80, 90};
  double lr_drop_factor = 10.0;
  double lambda_sparsity = 1e-3;
  std::uint64_t seed = 0;
  bool decay_edges = false;    // apply weight decay to raw edge weights too
  bool train_edges = true;     // false keeps edge weights fixed at their initial values
  int snapshot_interval = 50;  // steps between |tanh w| snapshots
  int eval_batch = 256;
  double grad_clip = 0.0;  // max global gradient L2 norm, 0 disables clipping

  /// Learning rate in effect during `epoch` (1-based).
  double lr_at(int epoch) const {
    double lr_now = lr;
    for (int d : lr_drop_epochs)
      if (epoch >= d) lr_now /= lr_drop_factor;
    return lr_now;
  }
  bool operator==(const TrainConfig&) const = default;
};

void validate(const TrainConfig& c);

struct EpochRecord {
  int epoch = 0;
  double lr = 0;
  double train_loss = 0;     // mean cross-entropy over the epoch
  double sparsity_loss = 0;  // sum |tanh w| at epoch end
  double test_accuracy = 0;
  bool operator==(const EpochRecord&) const = default;
};

struct EdgeSnapshot {
  std::int64_t step = 0;
  std::vector<double> magnitudes;
  bool operator==(const EdgeSnapshot&) const = default;
};

struct TrainLog {
  int snapshot_interval = 50;
  std::vector<EpochRecord> epochs;
  std::vector<EdgeSnapshot> snapshots;
  bool operator==(const TrainLog&) const = default;
};

/// Complete state of a run; enough to resume bit-identically.
template <typename Scalar>
struct TrainState {
  DagSpec graph;
  NetConfig net;
  TrainConfig config;
  NetworkParams<Scalar> params;
  Matrix<Scalar> edges;  // raw edge weights, E x 1
  std::vector<Matrix<Scalar>> velocity;
  Matrix<Scalar> edge_velocity;
  int epochs_done = 0;
  std::int64_t steps = 0;
  TrainLog log;
};

template <typename Scalar>
struct TrainResult {
  NetworkParams<Scalar> params;
  EdgeParams edges;
  TrainLog log;
  int channels = 0;  // base channel count the run used
};

template <typename Scalar>
TrainState<Scalar> make_train_state(const DagSpec& g, const NetConfig& cfg, const TrainConfig& tcfg,
                                    const std::optional<EdgeParams>& edge_init = std::nullopt) {
  validate(tcfg);
  TrainState<Scalar> s;
  s.graph = g;
  s.net = cfg;
  s.config = tcfg;
  s.params = build_network<Scalar>(g, cfg, derive_seed(tcfg.seed, "network"));
  const EdgeParams init = edge_init ? *edge_init : init_edge_params(g);
  if (init.raw.size() != g.edges.size()) throw TrainingError("edge_init does not match the graph");
  s.edges = edge_matrix<Scalar>(init);
  for (const auto& t : s.params.tensors) s.velocity.push_back(Matrix<Scalar>::Zero(t.rows(), t.cols()));
  s.edge_velocity = Matrix<Scalar>::Zero(s.edges.rows(), 1);
  s.log.snapshot_interval = tcfg.snapshot_interval;
  return s;
}

/// Eval-mode accuracy over a split.
template <typename Scalar>
double evaluate_accuracy(const DagSpec& g, const NetConfig& cfg, NetworkParams<Scalar>& params,
                         const Matrix<Scalar>& edges, const Dataset& data, const Split& split, int chunk = 256) {
  if (split.size() == 0) return 0.0;
  int correct = 0;
  std::vector<int> idx;
  for (int start = 0; start < split.size(); start += chunk) {
    const int end = std::min(split.size(), start + chunk);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    const Matrix<Scalar> logits = predict(g, cfg, params, edges, make_batch<Scalar>(data, split, idx));
    for (int i = 0; i < end - start; ++i) {
      Eigen::Index best;
      logits.col(i).maxCoeff(&best);
      correct += static_cast<int>(best) == split.labels[start + i];
    }
  }
  return static_cast<double>(correct) / split.size();
}

namespace detail {

template <typename Scalar>
void sgd_update(Matrix<Scalar>& p, Matrix<Scalar>& v, const Matrix<Scalar>& grad, double lr, double momentum,
                double weight_decay) {
  const auto wd = static_cast<Scalar>(weight_decay);
  const auto mu = static_cast<Scalar>(momentum);
  const auto rate = static_cast<Scalar>(lr);
  v = mu * v + grad + wd * p;
  p -= rate * v;
}

inline void check_dataset(const Dataset& data, const NetConfig& cfg) {
  if (data.resolution != cfg.input_resolution || data.channels != cfg.input_channels)
    throw TrainingError("dataset shape does not match the network config");
  if (data.num_classes > cfg.num_classes) throw TrainingError("dataset has more classes than the network head");
  if (data.train.size() == 0) throw TrainingError("empty training split");
}

}  // namespace detail

/// Runs epochs epochs_done+1 .. until_epoch. Momentum SGD on
/// cross-entropy + lambda * sum|tanh w|; weight decay on network parameters
/// (and on edges only if decay_edges).
template <typename Scalar>
void train_epochs(TrainState<Scalar>& s, const Dataset& data, int until_epoch) {
  detail::check_dataset(data, s.net);
  const TrainConfig& c = s.config;
  const int n = data.train.size();
  std::vector<int> order(n);
  for (int epoch = s.epochs_done + 1; epoch <= std::min(until_epoch, c.epochs); ++epoch) {
    const double lr = c.lr_at(epoch);
    std::iota(order.begin(), order.end(), 0);
    Rng(derive_seed(c.seed, "shuffle", static_cast<std::uint64_t>(epoch))).shuffle(std::span(order));
    double ce_sum = 0.0;
    int seen = 0;
    for (int start = 0; start < n; start += c.batch_size) {
      const int end = std::min(n, start + c.batch_size);
      if (end - start < 2 && seen > 0) break;  // batch norm needs two samples
      std::span<const int> idx(order.data() + start, end - start);
      std::vector<int> labels(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) labels[i] = data.train.labels[idx[i]];

      Tape<Scalar> tape;
      Var<Scalar> raw = c.train_edges ? tape.parameter(kEdgeParamId, Tensor<Scalar>(s.edges))
                                      : tape.constant(Tensor<Scalar>(s.edges));
      auto fwd = forward(tape, s.graph, s.net, s.params, raw, make_batch<Scalar>(data, data.train, idx), Mode::Train);
      Var<Scalar> ce = softmax_cross_entropy<Scalar>(fwd.logits, labels);
      Var<Scalar> loss = ce;
      if (c.train_edges && c.lambda_sparsity != 0.0)
        loss = ce + static_cast<Scalar>(c.lambda_sparsity) * sparsity_l1_tanh(raw);
      const double loss_value = static_cast<double>(loss.value().data(0, 0));
      if (!std::isfinite(loss_value))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                            std::to_string(s.steps + 1));
      const Gradients<Scalar> grads = tape.backward(loss);

      Scalar clip = 1;
      if (c.grad_clip > 0) {
        double norm2 = 0;
        for (const auto& [id, gm] : grads) norm2 += static_cast<double>(gm.squaredNorm());
        if (norm2 > c.grad_clip * c.grad_clip) clip = static_cast<Scalar>(c.grad_clip / std::sqrt(norm2));
      }
      for (std::size_t i = 0; i < s.params.tensors.size(); ++i) {
        auto it = grads.find(static_cast<int>(i));
        if (it == grads.end()) continue;  // not used by this forward pass
        detail::sgd_update<Scalar>(s.params.tensors[i], s.velocity[i], clip * it->second, lr, c.momentum,
                                   c.weight_decay);
      }
      if (c.train_edges) {
        detail::sgd_update<Scalar>(s.edges, s.edge_velocity, clip * grads.at(kEdgeParamId), lr, c.momentum,
                                   c.decay_edges ? c.weight_decay : 0.0);
      }

      ce_sum += static_cast<double>(ce.value().data(0, 0)) * static_cast<double>(idx.size());
      seen += static_cast<int>(idx.size());
      ++s.steps;
      if (c.snapshot_interval > 0 && s.steps % c.snapshot_interval == 0)
        s.log.snapshots.push_back({s.steps, to_edge_params(s.edges).magnitudes()});
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = ce_sum / std::max(seen, 1);
    rec.sparsity_loss = sparsity_loss(to_edge_params(s.edges));
    rec.test_accuracy = evaluate_accuracy(s.graph, s.net, s.params, s.edges, data, data.test, c.eval_batch);
    s.log.epochs.push_back(rec);
    s.epochs_done = epoch;
  }
}

template <typename Scalar>
TrainResult<Scalar> finish(TrainState<Scalar>&& s) {
  return {std::move(s.params), to_edge_params(s.edges), std::move(s.log), s.net.base_channels};
}

template <typename Scalar>
TrainResult<Scalar> train(const DagSpec& g, const NetConfig& cfg, const TrainConfig& tcfg, const Dataset& data,
                          const std::optional<EdgeParams>& edge_init = std::nullopt) {
  TrainState<Scalar> s = make_train_state<Scalar>(g, cfg, tcfg, edge_init);
  train_epochs(s, data, tcfg.epochs);
  return finish(std::move(s));
}

struct RetrainOptions {
  std::optional<double> lambda;  // defaults to 0: the topology is fixed
  bool fit_channels = false;
  std::int64_t target_params = 0;  // parameter budget for fit_channels
};

/// Trains a pruned graph from scratch: fresh network parameters from
/// `new_seed`, edge weights reset to artanh(0.5) on every retained edge.
template <typename Scalar>
TrainResult<Scalar> retrain(const DagSpec& pruned, NetConfig cfg, TrainConfig tcfg, const Dataset& data,
                            std::uint64_t new_seed, const RetrainOptions& opt = {}) {
  if (!has_input_output_path(pruned)) throw TrainingError("cannot retrain a disconnected graph");
  tcfg.seed = new_seed;
  tcfg.lambda_sparsity = opt.lambda.value_or(0.0);
  if (opt.fit_channels) cfg.base_channels = fit_channels(pruned, cfg, opt.target_params).channels;
  return train<Scalar>(pruned, cfg, tcfg, data, std::nullopt);
}

}  // namespace dagsparse
