#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "dagsparse/dag.hpp"
#include "dagsparse/tensor.hpp"

namespace dagsparse {

template <typename Scalar>
class Tape;

/// Handle to a value recorded on a Tape.
template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  int id = -1;

  const Tensor<Scalar>& value() const { return tape->value(*this); }
  bool valid() const { return tape != nullptr && id >= 0; }
};

/// Running statistics of a batch-norm layer. Not differentiated.
template <typename Scalar>
struct NormState {
  Vector<Scalar> running_mean;
  Vector<Scalar> running_var;

  explicit NormState(int channels = 0)
      : running_mean(Vector<Scalar>::Zero(channels)), running_var(Vector<Scalar>::Ones(channels)) {}
  bool operator==(const NormState& o) const {
    return running_mean == o.running_mean && running_var == o.running_var;
  }
};

template <typename Scalar>
using Gradients = std::map<int, Matrix<Scalar>>;

class AutogradError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear record of primitive ops. backward() replays the records in exact
/// reverse order of construction. A tape built with record_gradients=false
/// only evaluates values.
template <typename Scalar>
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix<Scalar>&)>;

  explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool records() const { return record_; }
  std::size_t size() const { return nodes_.size(); }

  Var<Scalar> constant(Tensor<Scalar> value) { return push(std::move(value), {}, nullptr, false); }

  Var<Scalar> parameter(int param_id, Tensor<Scalar> value) {
    Var<Scalar> v = push(std::move(value), {}, nullptr, record_);
    nodes_[v.id].param_id = param_id;
    params_.push_back(v.id);
    return v;
  }

  const Tensor<Scalar>& value(Var<Scalar> v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var<Scalar> v) const { return nodes_.at(v.id).requires_grad; }

  /// Records an op result. `backward` receives the gradient of the output and
  /// must route it to `inputs` through accumulate().
  Var<Scalar> record(Tensor<Scalar> value, std::vector<int> inputs, Backward backward) {
    bool needs = false;
    if (record_)
      for (int i : inputs) needs = needs || nodes_[i].requires_grad;
    return push(std::move(value), std::move(inputs), needs ? std::move(backward) : nullptr, needs);
  }

  template <typename Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0)
      n.grad = g;
    else
      n.grad += g;
  }

  void accumulate_entry(int id, Eigen::Index row, Eigen::Index col, Scalar g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad = Matrix<Scalar>::Zero(n.value.data.rows(), n.value.data.cols());
    n.grad(row, col) += g;
  }

  /// Reverse sweep from a scalar loss. Every parameter registered on the tape
  /// receives an entry, zero-filled when the loss does not depend on it.
  Gradients<Scalar> backward(Var<Scalar> loss) {
    if (!record_) throw AutogradError("tape was built without gradient recording");
    if (loss.tape != this || loss.id < 0 || loss.id >= static_cast<int>(nodes_.size()))
      throw AutogradError("loss is not a value on this tape");
    const Node& l = nodes_[loss.id];
    if (l.value.data.size() != 1) throw AutogradError("loss must be a scalar");
    if (!l.requires_grad || !reaches_parameter(loss.id))
      throw AutogradError("loss is disconnected from every parameter");

    for (Node& n : nodes_) n.grad.resize(0, 0);
    nodes_[loss.id].grad = Matrix<Scalar>::Ones(1, 1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.size() == 0) continue;
      n.backward(*this, n.grad);
    }

    Gradients<Scalar> grads;
    for (int id : params_) {
      const Node& n = nodes_[id];
      Matrix<Scalar> g = n.grad.size() ? n.grad
                                       : Matrix<Scalar>::Zero(n.value.data.rows(), n.value.data.cols());
      auto [it, inserted] = grads.emplace(n.param_id, g);
      if (!inserted) it->second += g;
    }
    return grads;
  }

 private:
  struct Node {
    Tensor<Scalar> value;
    Matrix<Scalar> grad;
    std::vector<int> inputs;
    Backward backward;
    bool requires_grad = false;
    int param_id = -1;
  };

  Var<Scalar> push(Tensor<Scalar> value, std::vector<int> inputs, Backward backward, bool requires_grad) {
    nodes_.push_back(Node{std::move(value), {}, std::move(inputs), std::move(backward), requires_grad, -1});
    return Var<Scalar>{this, static_cast<int>(nodes_.size()) - 1};
  }

  bool reaches_parameter(int from) const {
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<int> stack{from};
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      if (seen[i]) continue;
      seen[i] = 1;
      if (nodes_[i].param_id >= 0) return true;
      for (int j : nodes_[i].inputs)
        if (nodes_[j].requires_grad) stack.push_back(j);
    }
    return false;
  }

  bool record_;
  std::deque<Node> nodes_;
  std::vector<int> params_;
};

namespace detail {

template <typename Scalar>
void require_same_tape(Var<Scalar> a, Var<Scalar> b) {
  if (a.tape != b.tape) throw AutogradError("operands live on different tapes");
}

template <typename Scalar>
Tensor<Scalar> like(const Tensor<Scalar>& shape, std::type_identity_t<Matrix<Scalar>> data) {
  Tensor<Scalar> t(std::move(data));
  t.batch = shape.batch;
  t.height = shape.height;
  t.width = shape.width;
  return t;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) {
  detail::require_same_tape(a, b);
  const auto& av = a.value();
  if (!av.same_shape(b.value())) throw AutogradError("add: shape mismatch");
  const int ia = a.id, ib = b.id;
  return a.tape->record(detail::like(av, av.data + b.value().data), {ia, ib},
                        [ia, ib](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          t.accumulate(ia, g);
                          t.accumulate(ib, g);
                        });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  const int ia = a.id;
  const auto& av = a.value();
  return a.tape->record(detail::like(av, av.data * s), {ia},
                        [ia, s](Tape<Scalar>& t, const Matrix<Scalar>& g) { t.accumulate(ia, g * s); });
}

template <typename Scalar>
Var<Scalar> operator*(Scalar s, Var<Scalar> a) {
  return scale(a, s);
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> x) {
  const int ix = x.id;
  const auto& xv = x.value();
  return x.tape->record(detail::like(xv, xv.data.cwiseMax(Scalar(0))), {ix},
                        [ix](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          const auto& in = t.value(Var<Scalar>{&t, ix}).data;
                          t.accumulate(ix, (in.array() > Scalar(0)).select(g.array(), Scalar(0)).matrix());
                        });
}

template <typename Scalar>
Var<Scalar> sum_squares(Var<Scalar> x) {
  const int ix = x.id;
  Matrix<Scalar> out(1, 1);
  out(0, 0) = x.value().data.squaredNorm();
  return x.tape->record(Tensor<Scalar>(std::move(out)), {ix},
                        [ix](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          t.accumulate(ix, Scalar(2) * g(0, 0) * t.value(Var<Scalar>{&t, ix}).data);
                        });
}

/// sum(x .* weights) for a constant weight matrix; turns any op output into
/// a scalar for gradient checks.
template <typename Scalar>
Var<Scalar> inner(Var<Scalar> x, const Matrix<Scalar>& weights) {
  const int ix = x.id;
  if (weights.rows() != x.value().data.rows() || weights.cols() != x.value().data.cols())
    throw AutogradError("inner: shape mismatch");
  Matrix<Scalar> out(1, 1);
  out(0, 0) = x.value().data.cwiseProduct(weights).sum();
  return x.tape->record(Tensor<Scalar>(std::move(out)), {ix},
                        [ix, weights](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          t.accumulate(ix, g(0, 0) * weights);
                        });
}

// ---------------------------------------------------------------------------
// Convolution

struct ConvGeometry {
  int kernel = 3;
  int stride = 1;
  int pad = 1;

  int output_size(int input) const { return (input + 2 * pad - kernel) / stride + 1; }
};

namespace detail {

template <typename Scalar>
Matrix<Scalar> im2col(const Tensor<Scalar>& x, const ConvGeometry& geo, int out_h, int out_w) {
  const int c = x.channels(), k = geo.kernel;
  Matrix<Scalar> cols = Matrix<Scalar>::Zero(static_cast<Eigen::Index>(k) * k * c,
                                             static_cast<Eigen::Index>(x.batch) * out_h * out_w);
  const Scalar* src = x.data.data();
  Scalar* dst = cols.data();
  const Eigen::Index rows = cols.rows();
  for (int n = 0; n < x.batch; ++n)
    for (int oy = 0; oy < out_h; ++oy)
      for (int ox = 0; ox < out_w; ++ox) {
        Scalar* col = dst + ((static_cast<Eigen::Index>(n) * out_h + oy) * out_w + ox) * rows;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * geo.stride - geo.pad + ky;
          if (iy < 0 || iy >= x.height) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * geo.stride - geo.pad + kx;
            if (ix < 0 || ix >= x.width) continue;
            const Scalar* pix = src + ((static_cast<Eigen::Index>(n) * x.height + iy) * x.width + ix) * c;
            std::copy(pix, pix + c, col + (ky * k + kx) * c);
          }
        }
      }
  return cols;
}

template <typename Scalar>
void col2im_add(const Matrix<Scalar>& cols, const ConvGeometry& geo, int out_h, int out_w,
                int channels, int batch, int height, int width, Matrix<Scalar>& dx) {
  const int c = channels, k = geo.kernel;
  const Scalar* src = cols.data();
  Scalar* dst = dx.data();
  const Eigen::Index rows = cols.rows();
  for (int n = 0; n < batch; ++n)
    for (int oy = 0; oy < out_h; ++oy)
      for (int ox = 0; ox < out_w; ++ox) {
        const Scalar* col = src + ((static_cast<Eigen::Index>(n) * out_h + oy) * out_w + ox) * rows;
        for (int ky = 0; ky < k; ++ky) {
          const int iy = oy * geo.stride - geo.pad + ky;
          if (iy < 0 || iy >= height) continue;
          for (int kx = 0; kx < k; ++kx) {
            const int ix = ox * geo.stride - geo.pad + kx;
            if (ix < 0 || ix >= width) continue;
            Scalar* pix = dst + ((static_cast<Eigen::Index>(n) * height + iy) * width + ix) * c;
            const Scalar* part = col + (ky * k + kx) * c;
            for (int ch = 0; ch < c; ++ch) pix[ch] += part[ch];
          }
        }
      }
}

}  // namespace detail

/// 2-D convolution. `weight` is (out_channels x kernel*kernel*in_channels)
/// with column index (ky*kernel + kx)*in_channels + ci. `bias`, when valid,
/// is (out_channels x 1).
template <typename Scalar>
Var<Scalar> conv2d(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias, ConvGeometry geo) {
  Tape<Scalar>& tape = *x.tape;
  const Tensor<Scalar>& xv = x.value();
  const Matrix<Scalar>& w = weight.value().data;
  const int cin = xv.channels();
  if (w.cols() != static_cast<Eigen::Index>(geo.kernel) * geo.kernel * cin)
    throw AutogradError("conv2d: weight has " + std::to_string(w.cols()) + " columns for " +
                        std::to_string(cin) + " input channels and kernel " + std::to_string(geo.kernel));
  const int oh = geo.output_size(xv.height), ow = geo.output_size(xv.width);
  if (oh < 1 || ow < 1) throw AutogradError("conv2d: input too small for kernel");
  const bool pointwise = geo.kernel == 1 && geo.stride == 1 && geo.pad == 0;

  Matrix<Scalar> cols;
  if (!pointwise) cols = detail::im2col(xv, geo, oh, ow);
  Matrix<Scalar> out = pointwise ? Matrix<Scalar>(w * xv.data) : Matrix<Scalar>(w * cols);
  const bool has_bias = bias.valid();
  if (has_bias) out.colwise() += bias.value().data.col(0);

  const int ix = x.id, iw = weight.id, ib = has_bias ? bias.id : -1;
  std::vector<int> inputs{ix, iw};
  if (has_bias) inputs.push_back(ib);
  const int n = xv.batch, h = xv.height, wd = xv.width;
  if (!tape.records()) cols.resize(0, 0);
  return tape.record(
      Tensor<Scalar>(std::move(out), n, oh, ow), std::move(inputs),
      [=, cols = std::move(cols)](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        const auto& xin = t.value(Var<Scalar>{&t, ix}).data;
        const auto& wv = t.value(Var<Scalar>{&t, iw}).data;
        if (t.requires_grad(Var<Scalar>{&t, iw}))
          t.accumulate(iw, pointwise ? Matrix<Scalar>(g * xin.transpose()) : Matrix<Scalar>(g * cols.transpose()));
        if (ib >= 0) t.accumulate(ib, g.rowwise().sum());
        if (t.requires_grad(Var<Scalar>{&t, ix})) {
          if (pointwise) {
            t.accumulate(ix, wv.transpose() * g);
          } else {
            Matrix<Scalar> dcols = wv.transpose() * g;
            Matrix<Scalar> dx = Matrix<Scalar>::Zero(cin, xin.cols());
            detail::col2im_add(dcols, geo, oh, ow, cin, n, h, wd, dx);
            t.accumulate(ix, dx);
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Normalization, pooling, head

/// Per-channel batch normalization. In train mode it normalizes with batch
/// statistics, differentiates through them, and updates `state` with the
/// given momentum (unbiased running variance). In eval mode it uses the
/// running statistics.
template <typename Scalar>
Var<Scalar> batch_norm(Var<Scalar> x, Var<Scalar> gamma, Var<Scalar> beta, NormState<Scalar>& state,
                       bool train, Scalar momentum = Scalar(0.1), Scalar eps = Scalar(1e-5)) {
  const Tensor<Scalar>& xv = x.value();
  const Eigen::Index m = xv.data.cols();
  const int c = xv.channels();
  if (state.running_mean.size() != c) throw AutogradError("batch_norm: channel mismatch");
  Vector<Scalar> mean, var;
  if (train) {
    mean = xv.data.rowwise().mean();
    var = (xv.data.colwise() - mean).array().square().rowwise().mean();
    state.running_mean = (Scalar(1) - momentum) * state.running_mean + momentum * mean;
    const Scalar unbias = m > 1 ? Scalar(m) / Scalar(m - 1) : Scalar(1);
    state.running_var = (Scalar(1) - momentum) * state.running_var + momentum * unbias * var;
  } else {
    mean = state.running_mean;
    var = state.running_var;
  }
  Vector<Scalar> inv_std = (var.array() + eps).rsqrt().matrix();
  Matrix<Scalar> xhat = (xv.data.colwise() - mean).array().colwise() * inv_std.array();
  const auto& gv = gamma.value().data;
  const auto& bv = beta.value().data;
  Matrix<Scalar> out = (xhat.array().colwise() * gv.col(0).array()).colwise() + bv.col(0).array();

  const int ix = x.id, ig = gamma.id, ibeta = beta.id;
  if (!x.tape->records()) xhat.resize(0, 0);
  return x.tape->record(
      detail::like(xv, std::move(out)), {ix, ig, ibeta},
      [=, xhat = std::move(xhat)](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        const auto& gam = t.value(Var<Scalar>{&t, ig}).data;
        t.accumulate(ig, g.cwiseProduct(xhat).rowwise().sum());
        t.accumulate(ibeta, g.rowwise().sum());
        Matrix<Scalar> dxhat = g.array().colwise() * gam.col(0).array();
        if (train) {
          Vector<Scalar> sum_d = dxhat.rowwise().sum();
          Vector<Scalar> sum_dx = dxhat.cwiseProduct(xhat).rowwise().sum();
          Matrix<Scalar> dx = (Scalar(m) * dxhat).colwise() - sum_d;
          dx -= (xhat.array().colwise() * sum_dx.array()).matrix();
          dx = dx.array().colwise() * (inv_std.array() / Scalar(m));
          t.accumulate(ix, dx);
        } else {
          t.accumulate(ix, (dxhat.array().colwise() * inv_std.array()).matrix());
        }
      });
}

/// Mean over the pixels of each image; output is (channels x batch).
template <typename Scalar>
Var<Scalar> global_avg_pool(Var<Scalar> x) {
  const Tensor<Scalar>& xv = x.value();
  const int n = xv.batch, hw = xv.pixels(), c = xv.channels();
  Matrix<Scalar> out(c, n);
  for (int i = 0; i < n; ++i) out.col(i) = xv.data.middleCols(static_cast<Eigen::Index>(i) * hw, hw).rowwise().mean();
  const int ix = x.id;
  return x.tape->record(Tensor<Scalar>(std::move(out), n, 1, 1), {ix},
                        [ix, n, hw, c](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          Matrix<Scalar> dx(c, static_cast<Eigen::Index>(n) * hw);
                          for (int i = 0; i < n; ++i)
                            dx.middleCols(static_cast<Eigen::Index>(i) * hw, hw) =
                                (g.col(i) / Scalar(hw)).replicate(1, hw);
                          t.accumulate(ix, dx);
                        });
}

/// weight (out x in) * x (in x batch) + bias (out x 1).
template <typename Scalar>
Var<Scalar> linear(Var<Scalar> x, Var<Scalar> weight, Var<Scalar> bias) {
  const auto& xv = x.value();
  const auto& w = weight.value().data;
  if (w.cols() != xv.data.rows()) throw AutogradError("linear: feature mismatch");
  Matrix<Scalar> out = w * xv.data;
  out.colwise() += bias.value().data.col(0);
  const int ix = x.id, iw = weight.id, ib = bias.id;
  return x.tape->record(detail::like(xv, std::move(out)), {ix, iw, ib},
                        [ix, iw, ib](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                          const auto& xin = t.value(Var<Scalar>{&t, ix}).data;
                          const auto& wv = t.value(Var<Scalar>{&t, iw}).data;
                          t.accumulate(iw, g * xin.transpose());
                          t.accumulate(ib, g.rowwise().sum());
                          t.accumulate(ix, wv.transpose() * g);
                        });
}

/// Mean softmax cross-entropy of (classes x batch) logits.
template <typename Scalar>
Var<Scalar> softmax_cross_entropy(Var<Scalar> logits, std::span<const int> labels) {
  const auto& z = logits.value().data;
  const Eigen::Index k = z.rows(), n = z.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) throw AutogradError("cross-entropy: label count mismatch");
  Matrix<Scalar> probs(k, n);
  Scalar loss = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= k) throw AutogradError("cross-entropy: label out of range");
    const Scalar mx = z.col(i).maxCoeff();
    probs.col(i) = (z.col(i).array() - mx).exp();
    const Scalar s = probs.col(i).sum();
    probs.col(i) /= s;
    loss += -(z(labels[i], i) - mx - std::log(s));
  }
  Matrix<Scalar> out(1, 1);
  out(0, 0) = loss / Scalar(n);
  std::vector<int> y(labels.begin(), labels.end());
  const int iz = logits.id;
  return logits.tape->record(Tensor<Scalar>(std::move(out)), {iz},
                             [iz, probs = std::move(probs), y = std::move(y)](Tape<Scalar>& t,
                                                                              const Matrix<Scalar>& g) {
                               Matrix<Scalar> d = probs;
                               for (std::size_t i = 0; i < y.size(); ++i) d(y[i], i) -= Scalar(1);
                               t.accumulate(iz, d * (g(0, 0) / Scalar(y.size())));
                             });
}

// ---------------------------------------------------------------------------
// Edge weights

/// sum_i tanh(raw[edge_ids[i]]) * inputs[i], with `raw` the (E x 1) vector of
/// raw edge weights. Terms are added in the order given.
template <typename Scalar>
Var<Scalar> aggregate(Var<Scalar> raw, std::span<const int> edge_ids, std::span<const Var<Scalar>> inputs) {
  if (edge_ids.size() != inputs.size() || inputs.empty())
    throw AutogradError("aggregate: need one edge per input");
  const auto& w = raw.value().data;
  const Tensor<Scalar>& first = inputs[0].value();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(first.data.rows(), first.data.cols());
  std::vector<Scalar> tanhs(inputs.size());
  std::vector<int> ids{raw.id};
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (!inputs[i].value().same_shape(first)) throw AutogradError("aggregate: input shape mismatch");
    tanhs[i] = std::tanh(w(edge_ids[i], 0));
    out += tanhs[i] * inputs[i].value().data;
    ids.push_back(inputs[i].id);
  }
  std::vector<int> edges(edge_ids.begin(), edge_ids.end());
  const int iraw = raw.id;
  return raw.tape->record(
      detail::like(first, std::move(out)), ids,
      [iraw, ids, edges = std::move(edges), tanhs = std::move(tanhs)](Tape<Scalar>& t, const Matrix<Scalar>& g) {
        const bool raw_grad = t.requires_grad(Var<Scalar>{&t, iraw});
        for (std::size_t i = 0; i < edges.size(); ++i) {
          const int ix = ids[i + 1];
          if (raw_grad) {
            const Scalar dot = g.cwiseProduct(t.value(Var<Scalar>{&t, ix}).data).sum();
            t.accumulate_entry(iraw, edges[i], 0, (Scalar(1) - tanhs[i] * tanhs[i]) * dot);
          }
          t.accumulate(ix, tanhs[i] * g);
        }
      });
}

/// Subgradient of |tanh w| used by the sparsity penalty; 0 at w = 0.
template <typename Scalar>
Scalar abs_tanh_grad(Scalar w) {
  const Scalar th = std::tanh(w);
  const Scalar sign = th > Scalar(0) ? Scalar(1) : (th < Scalar(0) ? Scalar(-1) : Scalar(0));
  return sign * (Scalar(1) - th * th);
}

/// Edge sparsity penalty: sum over all entries of |tanh raw|.
template <typename Scalar>
Var<Scalar> sparsity_l1_tanh(Var<Scalar> raw) {
  const auto& w = raw.value().data;
  Matrix<Scalar> out(1, 1);
  out(0, 0) = w.array().tanh().abs().sum();
  const int iraw = raw.id;
  return raw.tape->record(Tensor<Scalar>(std::move(out)), {iraw}, [iraw](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    const auto& wv = t.value(Var<Scalar>{&t, iraw}).data;
    t.accumulate(iraw, g(0, 0) * wv.unaryExpr([](Scalar x) { return abs_tanh_grad(x); }));
  });
}

template <typename Scalar>
Matrix<Scalar> sparsity_gradient(const Matrix<Scalar>& raw) {
  return raw.unaryExpr([](Scalar x) { return abs_tanh_grad(x); });
}

inline std::vector<double> grad_of_sparsity(const EdgeParams& edges) {
  std::vector<double> g(edges.raw.size());
  for (std::size_t e = 0; e < g.size(); ++e) g[e] = abs_tanh_grad(edges.raw[e]);
  return g;
}

}  // namespace dagsparse
