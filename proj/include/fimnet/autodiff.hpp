#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fimnet/errors.hpp"
#include "fimnet/tensor.hpp"

namespace fimnet::ad {

// Handle into a Tape; only valid for the tape that produced it.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Records a single forward computation as a sequence of tensor operations,
// each with a hand-written adjoint. backward() walks the records in reverse
// creation order (a topological order by construction), accumulating
// gradients sequentially, so results are bit-reproducible.
template <class Real>
class Tape {
public:
  using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<Matrix>;
  using ConstMatMap = Eigen::Map<const Matrix>;
  using BackwardFn = std::function<void(Tape&, const Tensor<Real>&)>;

  struct Node {
    Tensor<Real> value;
    Tensor<Real> grad;  // allocated only when needs_grad
    BackwardFn backward;
    bool needs_grad = false;
  };

  Var leaf(Tensor<Real> value, bool needs_grad) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) n.grad = Tensor<Real>::zeros(n.value.shape);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Var constant(Tensor<Real> value) { return leaf(std::move(value), false); }

  Var op(Tensor<Real> value, bool needs_grad, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if (needs_grad) {
      n.grad = Tensor<Real>::zeros(n.value.shape);
      n.backward = std::move(backward);
    }
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  // Id the next op() call will return; lets an op's adjoint capture a handle
  // to its own output value.
  Var next_id() const { return Var{static_cast<int>(nodes_.size())}; }

  const Tensor<Real>& value(Var v) const { return node(v).value; }
  Tensor<Real>& grad(Var v) {
    Node& n = node(v);
    if (!n.needs_grad) throw NumericError("gradient requested for a constant node");
    return n.grad;
  }
  bool needs_grad(Var v) const { return node(v).needs_grad; }

  void backward(Var loss) {
    if (!loss.valid() || loss.id >= static_cast<int>(nodes_.size()))
      throw NumericError("backward called without a recorded forward pass");
    Node& top = node(loss);
    if (top.value.numel() != 1)
      throw NumericError("backward requires a scalar loss node");
    if (!top.needs_grad)
      throw NumericError("loss does not depend on any differentiable input");
    top.grad.data[0] = Real(1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.needs_grad && n.backward) n.backward(*this, n.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

private:
  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }

  std::vector<Node> nodes_;
};

namespace detail {

template <class Real>
void accumulate(Tensor<Real>& dst, const Tensor<Real>& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

inline void require(bool cond, const char* what) {
  if (!cond) throw NumericError(what);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

template <class Real>
Var add(Tape<Real>& tp, Var a, Var b) {
  const auto& av = tp.value(a);
  const auto& bv = tp.value(b);
  detail::require(av.same_shape(bv), "add: shape mismatch");
  Tensor<Real> out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += bv.data[i];
  const bool ng = tp.needs_grad(a) || tp.needs_grad(b);
  return tp.op(std::move(out), ng, [a, b](Tape<Real>& t, const Tensor<Real>& g) {
    if (t.needs_grad(a)) detail::accumulate(t.grad(a), g);
    if (t.needs_grad(b)) detail::accumulate(t.grad(b), g);
  });
}

template <class Real>
Var mul(Tape<Real>& tp, Var a, Var b) {
  const auto& av = tp.value(a);
  const auto& bv = tp.value(b);
  detail::require(av.same_shape(bv), "mul: shape mismatch");
  Tensor<Real> out = av;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= bv.data[i];
  const bool ng = tp.needs_grad(a) || tp.needs_grad(b);
  return tp.op(std::move(out), ng, [a, b](Tape<Real>& t, const Tensor<Real>& g) {
    if (t.needs_grad(a)) {
      auto& da = t.grad(a);
      const auto& bv2 = t.value(b);
      for (std::size_t i = 0; i < da.data.size(); ++i) da.data[i] += g.data[i] * bv2.data[i];
    }
    if (t.needs_grad(b)) {
      auto& db = t.grad(b);
      const auto& av2 = t.value(a);
      for (std::size_t i = 0; i < db.data.size(); ++i) db.data[i] += g.data[i] * av2.data[i];
    }
  });
}

template <class Real>
Var scale(Tape<Real>& tp, Var x, Real factor) {
  Tensor<Real> out = tp.value(x);
  for (Real& v : out.data) v *= factor;
  if (!tp.needs_grad(x)) return tp.constant(std::move(out));
  return tp.op(std::move(out), true, [x, factor](Tape<Real>& t, const Tensor<Real>& g) {
    auto& dx = t.grad(x);
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += g.data[i] * factor;
  });
}

template <class Real>
Var relu(Tape<Real>& tp, Var x) {
  Tensor<Real> out = tp.value(x);
  for (Real& v : out.data) v = std::max(v, Real(0));
  if (!tp.needs_grad(x)) return tp.constant(std::move(out));
  const Var self = tp.next_id();
  return tp.op(std::move(out), true, [x, self](Tape<Real>& t, const Tensor<Real>& g) {
    auto& dx = t.grad(x);
    const auto& y = t.value(self);
    for (std::size_t i = 0; i < dx.data.size(); ++i)
      if (y.data[i] > Real(0)) dx.data[i] += g.data[i];
  });
}

template <class Real>
Var tanh_op(Tape<Real>& tp, Var x) {
  Tensor<Real> out = tp.value(x);
  for (Real& v : out.data) v = std::tanh(v);
  if (!tp.needs_grad(x)) return tp.constant(std::move(out));
  const Var self = tp.next_id();
  return tp.op(std::move(out), true, [x, self](Tape<Real>& t, const Tensor<Real>& g) {
    auto& dx = t.grad(x);
    const auto& y = t.value(self);
    for (std::size_t i = 0; i < dx.data.size(); ++i)
      dx.data[i] += g.data[i] * (Real(1) - y.data[i] * y.data[i]);
  });
}

template <class Real>
Var sigmoid(Tape<Real>& tp, Var x) {
  Tensor<Real> out = tp.value(x);
  for (Real& v : out.data) v = Real(1) / (Real(1) + std::exp(-v));
  if (!tp.needs_grad(x)) return tp.constant(std::move(out));
  const Var self = tp.next_id();
  return tp.op(std::move(out), true, [x, self](Tape<Real>& t, const Tensor<Real>& g) {
    auto& dx = t.grad(x);
    const auto& y = t.value(self);
    for (std::size_t i = 0; i < dx.data.size(); ++i)
      dx.data[i] += g.data[i] * y.data[i] * (Real(1) - y.data[i]);
  });
}

// x scaled per trailing-dimension channel; used for ablation feature masks.
template <class Real>
Var channel_scale(Tape<Real>& tp, Var x, std::vector<Real> factors) {
  const auto& xv = tp.value(x);
  const int channels = xv.dim(xv.ndim() - 1);
  detail::require(static_cast<int>(factors.size()) == channels,
                  "channel_scale: factor count mismatch");
  Tensor<Real> out = xv;
  const std::size_t c = static_cast<std::size_t>(channels);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] *= factors[i % c];
  if (!tp.needs_grad(x)) return tp.constant(std::move(out));
  return tp.op(std::move(out), true,
               [x, factors = std::move(factors), c](Tape<Real>& t, const Tensor<Real>& g) {
                 auto& dx = t.grad(x);
                 for (std::size_t i = 0; i < dx.data.size(); ++i)
                   dx.data[i] += g.data[i] * factors[i % c];
               });
}

// ---------------------------------------------------------------------------
// shape plumbing
// ---------------------------------------------------------------------------

template <class Real>
Var reshape(Tape<Real>& tp, Var x, std::vector<int> new_shape) {
  const auto& xv = tp.value(x);
  detail::require(Tensor<Real>::count(new_shape) == xv.numel(), "reshape: element count mismatch");
  Tensor<Real> out;
  out.shape = std::move(new_shape);
  out.data = xv.data;
  if (!tp.needs_grad(x)) return tp.constant(std::move(out));
  return tp.op(std::move(out), true, [x](Tape<Real>& t, const Tensor<Real>& g) {
    auto& dx = t.grad(x);
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += g.data[i];
  });
}

// Columns [c0, c1) of a [R x C] matrix.
template <class Real>
Var slice_cols(Tape<Real>& tp, Var x, int c0, int c1) {
  const auto& xv = tp.value(x);
  detail::require(xv.ndim() == 2 && c0 >= 0 && c1 <= xv.dim(1) && c0 < c1,
                  "slice_cols: bad range");
  const int rows = xv.dim(0);
  const int cols = xv.dim(1);
  const int width = c1 - c0;
  Tensor<Real> out({rows, width});
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < width; ++c)
      out.at(r, c) = xv.data[static_cast<std::size_t>(r) * cols + c0 + c];
  if (!tp.needs_grad(x)) return tp.constant(std::move(out));
  return tp.op(std::move(out), true, [x, c0, cols, width](Tape<Real>& t, const Tensor<Real>& g) {
    auto& dx = t.grad(x);
    const int rows2 = g.dim(0);
    for (int r = 0; r < rows2; ++r)
      for (int c = 0; c < width; ++c)
        dx.data[static_cast<std::size_t>(r) * cols + c0 + c] += g.at(r, c);
  });
}

// Frame t of a [T x J x C] tensor as a [J x C] matrix.
template <class Real>
Var time_slice(Tape<Real>& tp, Var x, int t_index) {
  const auto& xv = tp.value(x);
  detail::require(xv.ndim() == 3 && t_index >= 0 && t_index < xv.dim(0),
                  "time_slice: bad index");
  const int j_count = xv.dim(1);
  const int channels = xv.dim(2);
  const std::size_t frame = static_cast<std::size_t>(j_count) * channels;
  Tensor<Real> out({j_count, channels});
  std::copy_n(xv.data.begin() + static_cast<std::ptrdiff_t>(frame) * t_index, frame,
              out.data.begin());
  if (!tp.needs_grad(x)) return tp.constant(std::move(out));
  return tp.op(std::move(out), true, [x, t_index, frame](Tape<Real>& t, const Tensor<Real>& g) {
    auto& dx = t.grad(x);
    Real* base = dx.data.data() + frame * static_cast<std::size_t>(t_index);
    for (std::size_t i = 0; i < frame; ++i) base[i] += g.data[i];
  });
}

// Stack T matrices [J x C] into [T x J x C].
template <class Real>
Var stack_time(Tape<Real>& tp, const std::vector<Var>& frames) {
  detail::require(!frames.empty(), "stack_time: empty input");
  const auto& first = tp.value(frames.front());
  detail::require(first.ndim() == 2, "stack_time: frames must be matrices");
  const int j_count = first.dim(0);
  const int channels = first.dim(1);
  const std::size_t frame_size = static_cast<std::size_t>(j_count) * channels;
  const int t_count = static_cast<int>(frames.size());

  Tensor<Real> out({t_count, j_count, channels});
  bool ng = false;
  for (int t = 0; t < t_count; ++t) {
    const auto& fv = tp.value(frames[static_cast<std::size_t>(t)]);
    detail::require(fv.dim(0) == j_count && fv.dim(1) == channels, "stack_time: shape mismatch");
    std::copy_n(fv.data.begin(), frame_size,
                out.data.begin() + static_cast<std::ptrdiff_t>(frame_size) * t);
    ng = ng || tp.needs_grad(frames[static_cast<std::size_t>(t)]);
  }
  if (!ng) return tp.constant(std::move(out));
  return tp.op(std::move(out), true,
               [frames, frame_size](Tape<Real>& t, const Tensor<Real>& g) {
                 for (std::size_t i = 0; i < frames.size(); ++i) {
                   if (!t.needs_grad(frames[i])) continue;
                   auto& df = t.grad(frames[i]);
                   const Real* base = g.data.data() + frame_size * i;
                   for (std::size_t k = 0; k < frame_size; ++k) df.data[k] += base[k];
                 }
               });
}

// Concatenate along the trailing channel dimension: [T x J x C1] + [T x J x C2].
template <class Real>
Var concat_channels(Tape<Real>& tp, Var a, Var b) {
  const auto& av = tp.value(a);
  const auto& bv = tp.value(b);
  detail::require(av.ndim() == 3 && bv.ndim() == 3 && av.dim(0) == bv.dim(0) &&
                      av.dim(1) == bv.dim(1),
                  "concat_channels: shape mismatch");
  const int t_count = av.dim(0);
  const int j_count = av.dim(1);
  const int ca = av.dim(2);
  const int cb = bv.dim(2);
  Tensor<Real> out({t_count, j_count, ca + cb});
  for (int t = 0; t < t_count; ++t)
    for (int j = 0; j < j_count; ++j) {
      for (int c = 0; c < ca; ++c) out.at(t, j, c) = av.at(t, j, c);
      for (int c = 0; c < cb; ++c) out.at(t, j, ca + c) = bv.at(t, j, c);
    }
  const bool ng = tp.needs_grad(a) || tp.needs_grad(b);
  if (!ng) return tp.constant(std::move(out));
  return tp.op(std::move(out), true, [a, b, ca, cb](Tape<Real>& t, const Tensor<Real>& g) {
    const int tc = g.dim(0);
    const int jc = g.dim(1);
    if (t.needs_grad(a)) {
      auto& da = t.grad(a);
      for (int ti = 0; ti < tc; ++ti)
        for (int j = 0; j < jc; ++j)
          for (int c = 0; c < ca; ++c) da.at(ti, j, c) += g.at(ti, j, c);
    }
    if (t.needs_grad(b)) {
      auto& db = t.grad(b);
      for (int ti = 0; ti < tc; ++ti)
        for (int j = 0; j < jc; ++j)
          for (int c = 0; c < cb; ++c) db.at(ti, j, c) += g.at(ti, j, ca + c);
    }
  });
}

// [C x T x J] -> [T x J x C]; the feature tensor arrives channel-major.
template <class Real>
Var to_time_major(Tape<Real>& tp, Var x) {
  const auto& xv = tp.value(x);
  detail::require(xv.ndim() == 3, "to_time_major: need 3-d input");
  const int channels = xv.dim(0);
  const int t_count = xv.dim(1);
  const int j_count = xv.dim(2);
  Tensor<Real> out({t_count, j_count, channels});
  for (int c = 0; c < channels; ++c)
    for (int t = 0; t < t_count; ++t)
      for (int j = 0; j < j_count; ++j) out.at(t, j, c) = xv.at(c, t, j);
  if (!tp.needs_grad(x)) return tp.constant(std::move(out));
  return tp.op(std::move(out), true, [x, channels, t_count, j_count](
                                         Tape<Real>& t, const Tensor<Real>& g) {
    auto& dx = t.grad(x);
    for (int c = 0; c < channels; ++c)
      for (int ti = 0; ti < t_count; ++ti)
        for (int j = 0; j < j_count; ++j) dx.at(c, ti, j) += g.at(ti, j, c);
  });
}

// ---------------------------------------------------------------------------
// linear algebra
// ---------------------------------------------------------------------------

// y = x W^T + b with weight [Cout x Cin]; x may have any leading shape as
// long as its trailing dimension is Cin. Bias is optional.
template <class Real>
Var linear(Tape<Real>& tp, Var x, Var weight, Var bias = {}) {
  const auto& xv = tp.value(x);
  const auto& wv = tp.value(weight);
  detail::require(wv.ndim() == 2, "linear: weight must be 2-d");
  const int c_in = wv.dim(1);
  const int c_out = wv.dim(0);
  detail::require(xv.ndim() >= 1 && xv.dim(xv.ndim() - 1) == c_in,
                  "linear: trailing dimension mismatch");
  const int rows = static_cast<int>(xv.numel() / c_in);

  std::vector<int> out_shape = xv.shape;
  out_shape.back() = c_out;
  Tensor<Real> out(out_shape);
  {
    typename Tape<Real>::ConstMatMap xm(xv.data.data(), rows, c_in);
    typename Tape<Real>::ConstMatMap wm(wv.data.data(), c_out, c_in);
    typename Tape<Real>::MatMap om(out.data.data(), rows, c_out);
    om.noalias() = xm * wm.transpose();
    if (bias.valid()) {
      const auto& bv = tp.value(bias);
      detail::require(bv.numel() == c_out, "linear: bias size mismatch");
      typename Tape<Real>::ConstMatMap bm(bv.data.data(), 1, c_out);
      om.rowwise() += bm.row(0);
    }
  }
  const bool ng = tp.needs_grad(x) || tp.needs_grad(weight) ||
                  (bias.valid() && tp.needs_grad(bias));
  if (!ng) return tp.constant(std::move(out));
  return tp.op(std::move(out), true,
               [x, weight, bias, rows, c_in, c_out](Tape<Real>& t, const Tensor<Real>& g) {
                 typename Tape<Real>::ConstMatMap gm(g.data.data(), rows, c_out);
                 if (t.needs_grad(x)) {
                   typename Tape<Real>::ConstMatMap wm(t.value(weight).data.data(), c_out, c_in);
                   typename Tape<Real>::MatMap dxm(t.grad(x).data.data(), rows, c_in);
                   dxm.noalias() += gm * wm;
                 }
                 if (t.needs_grad(weight)) {
                   typename Tape<Real>::ConstMatMap xm(t.value(x).data.data(), rows, c_in);
                   typename Tape<Real>::MatMap dwm(t.grad(weight).data.data(), c_out, c_in);
                   dwm.noalias() += gm.transpose() * xm;
                 }
                 if (bias.valid() && t.needs_grad(bias)) {
                   auto& db = t.grad(bias);
                   typename Tape<Real>::MatMap dbm(db.data.data(), 1, c_out);
                   dbm.row(0) += gm.colwise().sum();
                 }
               });
}

// out[t] = S F[t] applied at every frame of a [T x J x C] tensor, S [J x J].
template <class Real>
Var frame_mix(Tape<Real>& tp, Var s, Var f) {
  const auto& sv = tp.value(s);
  const auto& fv = tp.value(f);
  detail::require(sv.ndim() == 2 && sv.dim(0) == sv.dim(1), "frame_mix: S must be square");
  detail::require(fv.ndim() == 3 && fv.dim(1) == sv.dim(0), "frame_mix: joint count mismatch");
  const int t_count = fv.dim(0);
  const int j_count = fv.dim(1);
  const int channels = fv.dim(2);
  const std::size_t frame = static_cast<std::size_t>(j_count) * channels;

  Tensor<Real> out(fv.shape);
  {
    typename Tape<Real>::ConstMatMap sm(sv.data.data(), j_count, j_count);
    for (int t = 0; t < t_count; ++t) {
      typename Tape<Real>::ConstMatMap fm(fv.data.data() + frame * static_cast<std::size_t>(t),
                                          j_count, channels);
      typename Tape<Real>::MatMap om(out.data.data() + frame * static_cast<std::size_t>(t),
                                     j_count, channels);
      om.noalias() = sm * fm;
    }
  }
  const bool ng = tp.needs_grad(s) || tp.needs_grad(f);
  if (!ng) return tp.constant(std::move(out));
  return tp.op(std::move(out), true,
               [s, f, t_count, j_count, channels, frame](Tape<Real>& t, const Tensor<Real>& g) {
                 const auto& sv2 = t.value(s);
                 const auto& fv2 = t.value(f);
                 typename Tape<Real>::ConstMatMap sm(sv2.data.data(), j_count, j_count);
                 for (int ti = 0; ti < t_count; ++ti) {
                   typename Tape<Real>::ConstMatMap gm(
                       g.data.data() + frame * static_cast<std::size_t>(ti), j_count, channels);
                   if (t.needs_grad(f)) {
                     typename Tape<Real>::MatMap dfm(
                         t.grad(f).data.data() + frame * static_cast<std::size_t>(ti), j_count,
                         channels);
                     dfm.noalias() += sm.transpose() * gm;
                   }
                   if (t.needs_grad(s)) {
                     typename Tape<Real>::ConstMatMap fm(
                         fv2.data.data() + frame * static_cast<std::size_t>(ti), j_count, channels);
                     typename Tape<Real>::MatMap dsm(t.grad(s).data.data(), j_count, j_count);
                     dsm.noalias() += gm * fm.transpose();
                   }
                 }
               });
}

// S = D^{-1/2} (A (.) M) D^{-1/2} for one partition group; A and the inverse
// square-root degree diagonal are constants of the graph, M is learnable.
template <class Real>
Var masked_adjacency(Tape<Real>& tp, Var mask, const Tensor<Real>& adjacency,
                     const std::vector<Real>& inv_sqrt_degree) {
  const auto& mv = tp.value(mask);
  const int j_count = adjacency.dim(0);
  detail::require(mv.ndim() == 2 && mv.dim(0) == j_count && mv.dim(1) == j_count,
                  "masked_adjacency: mask shape mismatch");
  Tensor<Real> out({j_count, j_count});
  for (int i = 0; i < j_count; ++i)
    for (int j = 0; j < j_count; ++j)
      out.at(i, j) = inv_sqrt_degree[static_cast<std::size_t>(i)] * adjacency.at(i, j) *
                     mv.at(i, j) * inv_sqrt_degree[static_cast<std::size_t>(j)];
  if (!tp.needs_grad(mask)) return tp.constant(std::move(out));
  return tp.op(std::move(out), true,
               [mask, adjacency, inv_sqrt_degree, j_count](Tape<Real>& t, const Tensor<Real>& g) {
                 auto& dm = t.grad(mask);
                 for (int i = 0; i < j_count; ++i)
                   for (int j = 0; j < j_count; ++j)
                     dm.at(i, j) += g.at(i, j) * inv_sqrt_degree[static_cast<std::size_t>(i)] *
                                    adjacency.at(i, j) * inv_sqrt_degree[static_cast<std::size_t>(j)];
               });
}

// 1-d convolution over the time axis of a [T x J x Cin] tensor, weights
// [K x Cout x Cin], shared across joints, symmetric zero padding (K-1)/2,
// output [ceil(T/stride) x J x Cout].
template <class Real>
Var temporal_conv(Tape<Real>& tp, Var f, Var weight, Var bias, int stride) {
  const auto& fv = tp.value(f);
  const auto& wv = tp.value(weight);
  detail::require(stride >= 1, "temporal_conv: stride must be >= 1");
  detail::require(fv.ndim() == 3 && wv.ndim() == 3, "temporal_conv: bad ranks");
  const int t_in = fv.dim(0);
  const int j_count = fv.dim(1);
  const int c_in = fv.dim(2);
  const int kernel = wv.dim(0);
  const int c_out = wv.dim(1);
  detail::require(wv.dim(2) == c_in, "temporal_conv: channel mismatch");
  detail::require(kernel % 2 == 1, "temporal_conv: kernel must be odd");
  const int pad = (kernel - 1) / 2;
  const int t_out = (t_in + stride - 1) / stride;

  const auto& bv = tp.value(bias);
  detail::require(bv.numel() == c_out, "temporal_conv: bias size mismatch");

  const std::size_t in_frame = static_cast<std::size_t>(j_count) * c_in;
  const std::size_t out_frame = static_cast<std::size_t>(j_count) * c_out;
  const std::size_t w_slice = static_cast<std::size_t>(c_out) * c_in;

  Tensor<Real> out({t_out, j_count, c_out});
  {
    typename Tape<Real>::ConstMatMap bm(bv.data.data(), 1, c_out);
    for (int to = 0; to < t_out; ++to) {
      typename Tape<Real>::MatMap om(out.data.data() + out_frame * static_cast<std::size_t>(to),
                                     j_count, c_out);
      om.rowwise() = bm.row(0);
      for (int k = 0; k < kernel; ++k) {
        const int ti = to * stride + k - pad;
        if (ti < 0 || ti >= t_in) continue;
        typename Tape<Real>::ConstMatMap fm(fv.data.data() + in_frame * static_cast<std::size_t>(ti),
                                            j_count, c_in);
        typename Tape<Real>::ConstMatMap wm(wv.data.data() + w_slice * static_cast<std::size_t>(k),
                                            c_out, c_in);
        om.noalias() += fm * wm.transpose();
      }
    }
  }
  const bool ng = tp.needs_grad(f) || tp.needs_grad(weight) || tp.needs_grad(bias);
  if (!ng) return tp.constant(std::move(out));
  return tp.op(
      std::move(out), true,
      [f, weight, bias, stride, t_in, j_count, c_in, kernel, c_out, pad, t_out, in_frame,
       out_frame, w_slice](Tape<Real>& t, const Tensor<Real>& g) {
        const auto& fv2 = t.value(f);
        const auto& wv2 = t.value(weight);
        for (int to = 0; to < t_out; ++to) {
          typename Tape<Real>::ConstMatMap gm(g.data.data() + out_frame * static_cast<std::size_t>(to),
                                              j_count, c_out);
          if (t.needs_grad(bias)) {
            typename Tape<Real>::MatMap dbm(t.grad(bias).data.data(), 1, c_out);
            dbm.row(0) += gm.colwise().sum();
          }
          for (int k = 0; k < kernel; ++k) {
            const int ti = to * stride + k - pad;
            if (ti < 0 || ti >= t_in) continue;
            if (t.needs_grad(f)) {
              typename Tape<Real>::ConstMatMap wm(
                  wv2.data.data() + w_slice * static_cast<std::size_t>(k), c_out, c_in);
              typename Tape<Real>::MatMap dfm(
                  t.grad(f).data.data() + in_frame * static_cast<std::size_t>(ti), j_count, c_in);
              dfm.noalias() += gm * wm;
            }
            if (t.needs_grad(weight)) {
              typename Tape<Real>::ConstMatMap fm(
                  fv2.data.data() + in_frame * static_cast<std::size_t>(ti), j_count, c_in);
              typename Tape<Real>::MatMap dwm(
                  t.grad(weight).data.data() + w_slice * static_cast<std::size_t>(k), c_out, c_in);
              dwm.noalias() += gm.transpose() * fm;
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// reductions and attention plumbing
// ---------------------------------------------------------------------------

// Softmax over the trailing dimension; rows are treated independently.
// A 1-d input is a single row.
template <class Real>
Var softmax(Tape<Real>& tp, Var x) {
  const auto& xv = tp.value(x);
  const int cols = xv.dim(xv.ndim() - 1);
  const int rows = static_cast<int>(xv.numel() / cols);
  Tensor<Real> out = xv;
  for (int r = 0; r < rows; ++r) {
    Real* row = out.data.data() + static_cast<std::size_t>(r) * cols;
    Real max_v = row[0];
    for (int c = 1; c < cols; ++c) max_v = std::max(max_v, row[c]);
    Real sum = Real(0);
    for (int c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - max_v);
      sum += row[c];
    }
    const Real inv = Real(1) / sum;
    for (int c = 0; c < cols; ++c) row[c] *= inv;
  }
  if (!tp.needs_grad(x)) return tp.constant(std::move(out));
  const Var self = tp.next_id();
  return tp.op(std::move(out), true, [x, self, rows, cols](Tape<Real>& t, const Tensor<Real>& g) {
    auto& dx = t.grad(x);
    const auto& y = t.value(self);
    for (int r = 0; r < rows; ++r) {
      const Real* yr = y.data.data() + static_cast<std::size_t>(r) * cols;
      const Real* gr = g.data.data() + static_cast<std::size_t>(r) * cols;
      Real dot = Real(0);
      for (int c = 0; c < cols; ++c) dot += gr[c] * yr[c];
      Real* dr = dx.data.data() + static_cast<std::size_t>(r) * cols;
      for (int c = 0; c < cols; ++c) dr[c] += yr[c] * (gr[c] - dot);
    }
  });
}

// v[t] = sum_j alpha[t,j] z[t,j,:]; alpha [T x J], z [T x J x C] -> [T x C].
template <class Real>
Var attention_pool_joints(Tape<Real>& tp, Var alpha, Var z) {
  const auto& av = tp.value(alpha);
  const auto& zv = tp.value(z);
  detail::require(av.ndim() == 2 && zv.ndim() == 3 && av.dim(0) == zv.dim(0) &&
                      av.dim(1) == zv.dim(1),
                  "attention_pool_joints: shape mismatch");
  const int t_count = zv.dim(0);
  const int j_count = zv.dim(1);
  const int channels = zv.dim(2);
  const std::size_t frame = static_cast<std::size_t>(j_count) * channels;

  Tensor<Real> out({t_count, channels});
  for (int t = 0; t < t_count; ++t) {
    typename Tape<Real>::ConstMatMap zm(zv.data.data() + frame * static_cast<std::size_t>(t),
                                        j_count, channels);
    typename Tape<Real>::ConstMatMap am(av.data.data() + static_cast<std::size_t>(t) * j_count, 1,
                                        j_count);
    typename Tape<Real>::MatMap om(out.data.data() + static_cast<std::size_t>(t) * channels, 1,
                                   channels);
    om.noalias() = am * zm;
  }
  const bool ng = tp.needs_grad(alpha) || tp.needs_grad(z);
  if (!ng) return tp.constant(std::move(out));
  return tp.op(std::move(out), true,
               [alpha, z, t_count, j_count, channels, frame](Tape<Real>& t, const Tensor<Real>& g) {
                 const auto& av2 = t.value(alpha);
                 const auto& zv2 = t.value(z);
                 for (int ti = 0; ti < t_count; ++ti) {
                   typename Tape<Real>::ConstMatMap gm(
                       g.data.data() + static_cast<std::size_t>(ti) * channels, 1, channels);
                   if (t.needs_grad(alpha)) {
                     typename Tape<Real>::ConstMatMap zm(
                         zv2.data.data() + frame * static_cast<std::size_t>(ti), j_count, channels);
                     typename Tape<Real>::MatMap dam(
                         t.grad(alpha).data.data() + static_cast<std::size_t>(ti) * j_count, 1,
                         j_count);
                     dam.noalias() += gm * zm.transpose();
                   }
                   if (t.needs_grad(z)) {
                     typename Tape<Real>::ConstMatMap am(
                         av2.data.data() + static_cast<std::size_t>(ti) * j_count, 1, j_count);
                     typename Tape<Real>::MatMap dzm(
                         t.grad(z).data.data() + frame * static_cast<std::size_t>(ti), j_count,
                         channels);
                     dzm.noalias() += am.transpose() * gm;
                   }
                 }
               });
}

// z_out = sum_t beta[t] v[t,:]; beta [T], v [T x C] -> [C].
template <class Real>
Var attention_pool_time(Tape<Real>& tp, Var beta, Var v) {
  const auto& bv = tp.value(beta);
  const auto& vv = tp.value(v);
  detail::require(vv.ndim() == 2 && bv.numel() == vv.dim(0), "attention_pool_time: shape mismatch");
  const int t_count = vv.dim(0);
  const int channels = vv.dim(1);
  Tensor<Real> out({channels});
  for (int t = 0; t < t_count; ++t)
    for (int c = 0; c < channels; ++c) out.at(c) += bv.data[static_cast<std::size_t>(t)] * vv.at(t, c);
  const bool ng = tp.needs_grad(beta) || tp.needs_grad(v);
  if (!ng) return tp.constant(std::move(out));
  return tp.op(std::move(out), true,
               [beta, v, t_count, channels](Tape<Real>& t, const Tensor<Real>& g) {
                 const auto& bv2 = t.value(beta);
                 const auto& vv2 = t.value(v);
                 if (t.needs_grad(beta)) {
                   auto& db = t.grad(beta);
                   for (int ti = 0; ti < t_count; ++ti) {
                     Real dot = Real(0);
                     for (int c = 0; c < channels; ++c) dot += g.at(c) * vv2.at(ti, c);
                     db.data[static_cast<std::size_t>(ti)] += dot;
                   }
                 }
                 if (t.needs_grad(v)) {
                   auto& dv = t.grad(v);
                   for (int ti = 0; ti < t_count; ++ti)
                     for (int c = 0; c < channels; ++c)
                       dv.at(ti, c) += bv2.data[static_cast<std::size_t>(ti)] * g.at(c);
                 }
               });
}

// Mean over frames and joints of a [T x J x C] tensor -> [C].
template <class Real>
Var global_mean_pool(Tape<Real>& tp, Var z) {
  const auto& zv = tp.value(z);
  detail::require(zv.ndim() == 3, "global_mean_pool: need 3-d input");
  const int t_count = zv.dim(0);
  const int j_count = zv.dim(1);
  const int channels = zv.dim(2);
  const Real inv = Real(1) / static_cast<Real>(t_count * j_count);
  Tensor<Real> out({channels});
  for (int t = 0; t < t_count; ++t)
    for (int j = 0; j < j_count; ++j)
      for (int c = 0; c < channels; ++c) out.at(c) += zv.at(t, j, c) * inv;
  if (!tp.needs_grad(z)) return tp.constant(std::move(out));
  return tp.op(std::move(out), true,
               [z, t_count, j_count, channels, inv](Tape<Real>& t, const Tensor<Real>& g) {
                 auto& dz = t.grad(z);
                 for (int ti = 0; ti < t_count; ++ti)
                   for (int j = 0; j < j_count; ++j)
                     for (int c = 0; c < channels; ++c) dz.at(ti, j, c) += g.at(c) * inv;
               });
}

template <class Real>
Var sum_all(Tape<Real>& tp, Var x) {
  const auto& xv = tp.value(x);
  Tensor<Real> out({1});
  for (Real v : xv.data) out.data[0] += v;
  if (!tp.needs_grad(x)) return tp.constant(std::move(out));
  return tp.op(std::move(out), true, [x](Tape<Real>& t, const Tensor<Real>& g) {
    auto& dx = t.grad(x);
    for (Real& v : dx.data) v += g.data[0];
  });
}

// -sum_k y_k log(max(p_k, clamp)) for a one-hot target.
template <class Real>
Var cross_entropy(Tape<Real>& tp, Var probs, const std::vector<Real>& one_hot,
                  Real clamp = Real(1e-12)) {
  const auto& pv = tp.value(probs);
  detail::require(pv.numel() == static_cast<std::int64_t>(one_hot.size()),
                  "cross_entropy: class count mismatch");
  int ones = 0;
  for (Real v : one_hot) {
    if (v == Real(1)) ++ones;
    else if (v != Real(0)) throw DataError("cross_entropy: target is not one-hot");
  }
  if (ones != 1) throw DataError("cross_entropy: target is not one-hot");

  Tensor<Real> out({1});
  for (std::size_t k = 0; k < one_hot.size(); ++k)
    if (one_hot[k] == Real(1))
      out.data[0] -= std::log(std::max(pv.data[k], clamp));
  if (!tp.needs_grad(probs)) return tp.constant(std::move(out));
  return tp.op(std::move(out), true,
               [probs, one_hot, clamp](Tape<Real>& t, const Tensor<Real>& g) {
                 auto& dp = t.grad(probs);
                 const auto& pv2 = t.value(probs);
                 for (std::size_t k = 0; k < one_hot.size(); ++k)
                   if (one_hot[k] == Real(1) && pv2.data[k] >= clamp)
                     dp.data[k] -= g.data[0] / pv2.data[k];
               });
}

}  // namespace fimnet::ad
