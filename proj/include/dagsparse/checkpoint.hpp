#pragma once

#include <string>

#include "dagsparse/binary_io.hpp"
#include "dagsparse/trainer.hpp"

// File layout: "DGSP", u32 version, u32 crc32(payload), u64 payload length,
// payload. All integers and floats are little-endian.
//
// Payload: scalar width (u32, 4 or 8), DagSpec, NetConfig, TrainConfig,
// network tensors (name + shape + values), norm running statistics, raw edge
// weights, optimizer velocities, epochs_done, steps, TrainLog.

namespace dagsparse {

inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void put(ByteWriter& w, const DagSpec& g) {
  w.i32(g.node_count);
  for (int s : g.stage_of) w.i32(s);
  w.u64(g.edges.size());
  for (const Edge& e : g.edges) {
    w.i32(e.src);
    w.i32(e.dst);
  }
  w.i32(g.input_node);
  w.i32(g.output_node);
}

inline DagSpec get_dag(ByteReader& r) {
  DagSpec g;
  g.node_count = r.i32();
  if (g.node_count < 0 || g.node_count > (1 << 20)) throw FormatError("checkpoint: bad node count");
  g.stage_of.resize(g.node_count);
  for (int& s : g.stage_of) s = r.i32();
  const std::uint64_t ne = r.u64();
  if (ne > r.remaining() / 8) throw FormatError("checkpoint: bad edge count");
  g.edges.resize(ne);
  for (Edge& e : g.edges) {
    e.src = r.i32();
    e.dst = r.i32();
  }
  g.input_node = r.i32();
  g.output_node = r.i32();
  validate(g);
  return g;
}

inline void put(ByteWriter& w, const NetConfig& c) {
  for (int v : {c.base_channels, c.input_resolution, c.input_channels, c.num_classes, c.kernel_size}) w.i32(v);
  w.f64(c.norm_momentum);
  w.f64(c.norm_eps);
}

inline NetConfig get_net(ByteReader& r) {
  NetConfig c;
  c.base_channels = r.i32();
  c.input_resolution = r.i32();
  c.input_channels = r.i32();
  c.num_classes = r.i32();
  c.kernel_size = r.i32();
  c.norm_momentum = r.f64();
  c.norm_eps = r.f64();
  return c;
}

inline void put(ByteWriter& w, const TrainConfig& c) {
  w.i32(c.epochs);
  w.f64(c.lr);
  w.f64(c.momentum);
  w.i32(c.batch_size);
  w.f64(c.weight_decay);
  w.u32(static_cast<std::uint32_t>(c.lr_drop_epochs.size()));
  for (int e : c.lr_drop_epochs) w.i32(e);
  w.f64(c.lr_drop_factor);
  w.f64(c.lambda_sparsity);
  w.u64(c.seed);
  w.u8(c.decay_edges);
  w.u8(c.train_edges);
  w.i32(c.snapshot_interval);
  w.i32(c.eval_batch);
  w.f64(c.grad_clip);
}

inline TrainConfig get_train(ByteReader& r) {
  TrainConfig c;
  c.epochs = r.i32();
  c.lr = r.f64();
  c.momentum = r.f64();
  c.batch_size = r.i32();
  c.weight_decay = r.f64();
  c.lr_drop_epochs.resize(r.u32());
  for (int& e : c.lr_drop_epochs) e = r.i32();
  c.lr_drop_factor = r.f64();
  c.lambda_sparsity = r.f64();
  c.seed = r.u64();
  c.decay_edges = r.u8() != 0;
  c.train_edges = r.u8() != 0;
  c.snapshot_interval = r.i32();
  c.eval_batch = r.i32();
  c.grad_clip = r.f64();
  return c;
}

template <typename Scalar>
void put_values(ByteWriter& w, const Matrix<Scalar>& m) {
  w.u64(static_cast<std::uint64_t>(m.rows()));
  w.u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if constexpr (sizeof(Scalar) == 4)
      w.f32(m.data()[i]);
    else
      w.f64(m.data()[i]);
  }
}

template <typename Scalar>
void get_values(ByteReader& r, Matrix<Scalar>& m, const std::string& what) {
  const auto rows = static_cast<Eigen::Index>(r.u64());
  const auto cols = static_cast<Eigen::Index>(r.u64());
  if (rows != m.rows() || cols != m.cols()) throw FormatError("checkpoint: shape mismatch for " + what);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    if constexpr (sizeof(Scalar) == 4)
      m.data()[i] = r.f32();
    else
      m.data()[i] = r.f64();
  }
}

inline void put(ByteWriter& w, const TrainLog& log) {
  w.i32(log.snapshot_interval);
  w.u64(log.epochs.size());
  for (const EpochRecord& e : log.epochs) {
    w.i32(e.epoch);
    w.f64(e.lr);
    w.f64(e.train_loss);
    w.f64(e.sparsity_loss);
    w.f64(e.test_accuracy);
  }
  w.u64(log.snapshots.size());
  for (const EdgeSnapshot& s : log.snapshots) {
    w.i64(s.step);
    w.u64(s.magnitudes.size());
    for (double m : s.magnitudes) w.f64(m);
  }
}

inline TrainLog get_log(ByteReader& r) {
  TrainLog log;
  log.snapshot_interval = r.i32();
  const std::uint64_t ne = r.u64();
  if (ne > r.remaining()) throw FormatError("checkpoint: bad epoch count");
  log.epochs.resize(ne);
  for (EpochRecord& e : log.epochs) {
    e.epoch = r.i32();
    e.lr = r.f64();
    e.train_loss = r.f64();
    e.sparsity_loss = r.f64();
    e.test_accuracy = r.f64();
  }
  const std::uint64_t ns = r.u64();
  if (ns > r.remaining()) throw FormatError("checkpoint: bad snapshot count");
  log.snapshots.resize(ns);
  for (EdgeSnapshot& s : log.snapshots) {
    s.step = r.i64();
    const std::uint64_t n = r.u64();
    if (n > r.remaining() / 8) throw FormatError("checkpoint: bad snapshot size");
    s.magnitudes.resize(n);
    for (double& m : s.magnitudes) m = r.f64();
  }
  return log;
}

}  // namespace detail

template <typename Scalar>
std::string serialize_checkpoint(const TrainState<Scalar>& s) {
  ByteWriter p;
  p.u32(sizeof(Scalar));
  detail::put(p, s.graph);
  detail::put(p, s.net);
  detail::put(p, s.config);
  p.u64(s.params.tensors.size());
  for (std::size_t i = 0; i < s.params.tensors.size(); ++i) {
    p.str(s.params.names[i]);
    detail::put_values(p, s.params.tensors[i]);
  }
  p.u64(s.params.norms.size());
  for (const auto& n : s.params.norms) {
    detail::put_values<Scalar>(p, n.running_mean);
    detail::put_values<Scalar>(p, n.running_var);
  }
  detail::put_values(p, s.edges);
  for (const auto& v : s.velocity) detail::put_values(p, v);
  detail::put_values(p, s.edge_velocity);
  p.i32(s.epochs_done);
  p.i64(s.steps);
  detail::put(p, s.log);

  ByteWriter w;
  w.bytes("DGSP");
  w.u32(kCheckpointVersion);
  w.u32(crc32(p.data()));
  w.u64(p.data().size());
  w.bytes(p.data());
  return w.take();
}

template <typename Scalar>
TrainState<Scalar> deserialize_checkpoint(std::string_view bytes) {
  ByteReader h(bytes);
  if (bytes.size() < 20 || h.bytes(4) != "DGSP") throw FormatError("not a checkpoint file");
  const std::uint32_t version = h.u32();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  const std::uint32_t crc = h.u32();
  const std::uint64_t len = h.u64();
  if (len != h.remaining()) throw FormatError("checkpoint checksum error: length mismatch (truncated file?)");
  const std::string_view payload = h.bytes(len);
  if (crc32(payload) != crc) throw FormatError("checkpoint checksum error: payload corrupted");

  ByteReader r(payload);
  if (r.u32() != sizeof(Scalar)) throw FormatError("checkpoint scalar width does not match");
  TrainState<Scalar> s;
  s.graph = detail::get_dag(r);
  s.net = detail::get_net(r);
  s.config = detail::get_train(r);
  s.params = detail::allocate<Scalar>(s.graph, s.net);
  if (r.u64() != s.params.tensors.size()) throw FormatError("checkpoint: tensor count mismatch");
  for (std::size_t i = 0; i < s.params.tensors.size(); ++i) {
    if (r.str() != s.params.names[i]) throw FormatError("checkpoint: tensor name mismatch at " + std::to_string(i));
    detail::get_values(r, s.params.tensors[i], s.params.names[i]);
  }
  if (r.u64() != s.params.norms.size()) throw FormatError("checkpoint: norm count mismatch");
  for (auto& n : s.params.norms) {
    Matrix<Scalar> mean(n.running_mean.size(), 1), var(n.running_var.size(), 1);
    detail::get_values(r, mean, "running mean");
    detail::get_values(r, var, "running var");
    n.running_mean = mean.col(0);
    n.running_var = var.col(0);
  }
  s.edges = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(s.graph.edges.size()), 1);
  detail::get_values(r, s.edges, "edges");
  for (const auto& t : s.params.tensors) {
    s.velocity.push_back(Matrix<Scalar>::Zero(t.rows(), t.cols()));
    detail::get_values(r, s.velocity.back(), "velocity");
  }
  s.edge_velocity = Matrix<Scalar>::Zero(s.edges.rows(), 1);
  detail::get_values(r, s.edge_velocity, "edge velocity");
  s.epochs_done = r.i32();
  s.steps = r.i64();
  s.log = detail::get_log(r);
  if (!r.done()) throw FormatError("checkpoint: trailing bytes");
  return s;
}

template <typename Scalar>
void save_checkpoint(const std::string& path, const TrainState<Scalar>& s) {
  write_file_atomic(path, serialize_checkpoint(s));
}

template <typename Scalar>
TrainState<Scalar> load_checkpoint(const std::string& path) {
  return deserialize_checkpoint<Scalar>(read_file(path));
}

}  // namespace dagsparse
