// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over Tensor<T>.
//
// Every operation records a node holding its value, its inputs and a backward rule. Backward
// rules are written in terms of the same recorded operations, so running backward while in
// GradMode::kDifferentiable records the backward pass itself and the resulting gradients can be
// differentiated again (double backprop, needed for the critic's gradient penalty). In
// GradMode::kFirstOrder the backward pass runs with recording switched off.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "beamcast/conv_kernels.hpp"
#include "beamcast/errors.hpp"
#include "beamcast/tensor.hpp"

namespace beamcast::ad {

enum class GradMode {
  kNoGrad,          // forward only, nothing recorded
  kFirstOrder,      // forward recorded; backward produces plain values
  kDifferentiable,  // forward and backward recorded
};

namespace detail {
inline thread_local GradMode g_grad_mode = GradMode::kFirstOrder;
}

inline GradMode grad_mode() { return detail::g_grad_mode; }

/// Scoped override of the calling thread's gradient mode.
class GradModeGuard {
 public:
  explicit GradModeGuard(GradMode mode) : saved_(detail::g_grad_mode) {
    detail::g_grad_mode = mode;
  }
  ~GradModeGuard() { detail::g_grad_mode = saved_; }
  GradModeGuard(const GradModeGuard&) = delete;
  GradModeGuard& operator=(const GradModeGuard&) = delete;

 private:
  GradMode saved_;
};

template <typename T>
class Var;

template <typename T>
using BackwardFn = std::function<std::vector<Var<T>>(std::span<const Var<T>> inputs,
                                                     const Var<T>& upstream)>;

template <typename T>
struct Node {
  Tensor<T> value;
  bool requires_grad = false;
  std::vector<Var<T>> inputs;
  BackwardFn<T> backward;
  const char* op = "leaf";
};

/// Handle to a node of the computation graph. Copies share the node.
template <typename T>
class Var {
 public:
  Var() = default;

  static Var constant(Tensor<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    return Var(std::move(n));
  }

  /// Leaf that gradients are reported for.
  static Var leaf(Tensor<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(std::move(n));
  }

  bool defined() const noexcept { return node_ != nullptr; }
  const Tensor<T>& value() const { return node_->value; }
  /// In-place access for optimizer updates of leaf parameters.
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const noexcept { return node_ && node_->requires_grad; }
  bool is_leaf() const noexcept { return node_ && !node_->backward; }
  const char* op() const { return node_->op; }
  Node<T>* node() const noexcept { return node_.get(); }

  Var detach() const { return constant(node_->value); }

  explicit Var(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Creates an op node. Records inputs and the backward rule only when recording is enabled and
/// some input requires a gradient; otherwise the result is a constant.
template <typename T>
Var<T> record(Tensor<T> value, std::vector<Var<T>> inputs, BackwardFn<T> backward,
              const char* op) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  const bool track =
      grad_mode() != GradMode::kNoGrad &&
      std::any_of(inputs.begin(), inputs.end(), [](const Var<T>& v) { return v.requires_grad(); });
  if (track) {
    n->requires_grad = true;
    n->inputs = std::move(inputs);
    n->backward = std::move(backward);
    n->op = op;
  }
  return Var<T>(std::move(n));
}

namespace detail {

template <typename T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
}

template <typename T>
void require_scalar(const Var<T>& s, const char* op) {
  if (s.size() != 1)
    throw DimensionError(std::string(op) + ": expected a scalar, got " + to_string(s.shape()));
}

template <typename T, typename F>
Tensor<T> map(const Tensor<T>& a, F&& f) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <typename T, typename F>
Tensor<T> zip(const Tensor<T>& a, const Tensor<T>& b, F&& f) {
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

inline std::size_t channels_of(const Shape& s) { return s.back(); }

}  // namespace detail

// ---------------------------------------------------------------------------------------------
// Elementwise and reduction ops

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& a, T c);
template <typename T>
Var<T> sum(const Var<T>& a);
template <typename T>
Var<T> broadcast(const Var<T>& s, const Shape& shape);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a, b, "add");
  return record<T>(detail::zip(a.value(), b.value(), [](T x, T y) { return x + y; }), {a, b},
                   [](std::span<const Var<T>>, const Var<T>& g) {
                     return std::vector<Var<T>>{g, g};
                   },
                   "add");
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a, b, "sub");
  return record<T>(detail::zip(a.value(), b.value(), [](T x, T y) { return x - y; }), {a, b},
                   [](std::span<const Var<T>>, const Var<T>& g) {
                     return std::vector<Var<T>>{g, scale(g, T(-1))};
                   },
                   "sub");
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  detail::require_same_shape(a, b, "mul");
  return record<T>(detail::zip(a.value(), b.value(), [](T x, T y) { return x * y; }), {a, b},
                   [](std::span<const Var<T>> in, const Var<T>& g) {
                     return std::vector<Var<T>>{mul(g, in[1]), mul(g, in[0])};
                   },
                   "mul");
}

template <typename T>
Var<T> scale(const Var<T>& a, T c) {
  return record<T>(detail::map(a.value(), [c](T x) { return c * x; }), {a},
                   [c](std::span<const Var<T>>, const Var<T>& g) {
                     return std::vector<Var<T>>{scale(g, c)};
                   },
                   "scale");
}

template <typename T>
Var<T> add_const(const Var<T>& a, T c) {
  return record<T>(detail::map(a.value(), [c](T x) { return x + c; }), {a},
                   [](std::span<const Var<T>>, const Var<T>& g) { return std::vector<Var<T>>{g}; },
                   "add_const");
}

/// Elementwise power with a constant exponent.
template <typename T>
Var<T> pow(const Var<T>& a, T p) {
  return record<T>(detail::map(a.value(), [p](T x) { return std::pow(x, p); }), {a},
                   [p](std::span<const Var<T>> in, const Var<T>& g) {
                     if (p == T(1)) return std::vector<Var<T>>{g};
                     return std::vector<Var<T>>{mul(g, scale(pow(in[0], p - T(1)), p))};
                   },
                   "pow");
}

/// Sum of all entries, shape [1].
template <typename T>
Var<T> sum(const Var<T>& a) {
  T acc = T(0);
  for (T v : a.value().data()) acc += v;
  return record<T>(Tensor<T>::scalar(acc), {a},
                   [](std::span<const Var<T>> in, const Var<T>& g) {
                     return std::vector<Var<T>>{broadcast(g, in[0].shape())};
                   },
                   "sum");
}

/// Replicates a scalar over `shape`.
template <typename T>
Var<T> broadcast(const Var<T>& s, const Shape& shape) {
  detail::require_scalar(s, "broadcast");
  return record<T>(Tensor<T>(shape, s.value()[0]), {s},
                   [](std::span<const Var<T>>, const Var<T>& g) {
                     return std::vector<Var<T>>{sum(g)};
                   },
                   "broadcast");
}

/// a * s with s a scalar node.
template <typename T>
Var<T> mul_scalar(const Var<T>& a, const Var<T>& s) {
  detail::require_scalar(s, "mul_scalar");
  const T c = s.value()[0];
  return record<T>(detail::map(a.value(), [c](T x) { return x * c; }), {a, s},
                   [](std::span<const Var<T>> in, const Var<T>& g) {
                     return std::vector<Var<T>>{mul_scalar(g, in[1]), sum(mul(g, in[0]))};
                   },
                   "mul_scalar");
}

/// a + s with s a scalar node.
template <typename T>
Var<T> add_scalar(const Var<T>& a, const Var<T>& s) {
  detail::require_scalar(s, "add_scalar");
  const T c = s.value()[0];
  return record<T>(detail::map(a.value(), [c](T x) { return x + c; }), {a, s},
                   [](std::span<const Var<T>>, const Var<T>& g) {
                     return std::vector<Var<T>>{g, sum(g)};
                   },
                   "add_scalar");
}

/// Multiplication by a constant elementwise mask; linear in `a`.
template <typename T>
Var<T> mask_mul(const Var<T>& a, std::shared_ptr<const Tensor<T>> mask) {
  if (mask->shape() != a.shape()) throw DimensionError("mask_mul: shape mismatch");
  return record<T>(detail::zip(a.value(), *mask, [](T x, T m) { return x * m; }), {a},
                   [mask](std::span<const Var<T>>, const Var<T>& g) {
                     return std::vector<Var<T>>{mask_mul(g, mask)};
                   },
                   "mask_mul");
}

/// x if x >= 0 else slope * x.
template <typename T>
Var<T> leaky_relu(const Var<T>& a, T slope = T(0.2)) {
  auto mask = std::make_shared<Tensor<T>>(
      detail::map(a.value(), [slope](T x) { return x >= T(0) ? T(1) : slope; }));
  return mask_mul(a, std::shared_ptr<const Tensor<T>>(std::move(mask)));
}

// ---------------------------------------------------------------------------------------------
// Channel (last-axis) broadcasting

template <typename T>
Var<T> broadcast_channels(const Var<T>& b, const Shape& shape);

/// Sum over every axis but the last: [..., C] -> [C].
template <typename T>
Var<T> sum_channels(const Var<T>& a) {
  const std::size_t c = detail::channels_of(a.shape());
  Tensor<T> out(Shape{c});
  const auto& v = a.value();
  for (std::size_t i = 0; i < v.size(); ++i) out[i % c] += v[i];
  return record<T>(std::move(out), {a},
                   [](std::span<const Var<T>> in, const Var<T>& g) {
                     return std::vector<Var<T>>{broadcast_channels(g, in[0].shape())};
                   },
                   "sum_channels");
}

/// [C] -> shape with trailing axis C.
template <typename T>
Var<T> broadcast_channels(const Var<T>& b, const Shape& shape) {
  const std::size_t c = detail::channels_of(shape);
  if (b.shape() != Shape{c})
    throw DimensionError("broadcast_channels: expected [" + std::to_string(c) + "], got " +
                             to_string(b.shape()),
                         shape.size() - 1);
  Tensor<T> out(shape);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b.value()[i % c];
  return record<T>(std::move(out), {b},
                   [](std::span<const Var<T>>, const Var<T>& g) {
                     return std::vector<Var<T>>{sum_channels(g)};
                   },
                   "broadcast_channels");
}

/// a + b[c] along the last axis.
template <typename T>
Var<T> add_channels(const Var<T>& a, const Var<T>& b) {
  const std::size_t c = detail::channels_of(a.shape());
  if (b.shape() != Shape{c})
    throw DimensionError("add_channels: bias shape " + to_string(b.shape()) +
                             " does not match channel count " + std::to_string(c),
                         a.shape().size() - 1);
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i % c];
  return record<T>(std::move(out), {a, b},
                   [](std::span<const Var<T>>, const Var<T>& g) {
                     return std::vector<Var<T>>{g, sum_channels(g)};
                   },
                   "add_channels");
}

/// a * b[c] along the last axis.
template <typename T>
Var<T> mul_channels(const Var<T>& a, const Var<T>& b) {
  const std::size_t c = detail::channels_of(a.shape());
  if (b.shape() != Shape{c})
    throw DimensionError("mul_channels: gain shape " + to_string(b.shape()) +
                             " does not match channel count " + std::to_string(c),
                         a.shape().size() - 1);
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i % c];
  return record<T>(std::move(out), {a, b},
                   [](std::span<const Var<T>> in, const Var<T>& g) {
                     return std::vector<Var<T>>{mul_channels(g, in[1]), sum_channels(mul(g, in[0]))};
                   },
                   "mul_channels");
}

// ---------------------------------------------------------------------------------------------
// Convolution family. conv, conv_input_adjoint and conv_kernel_adjoint are the three partial
// contractions of <conv(x, k), g>, so each one's derivatives are expressed by the other two.

template <typename T>
Var<T> conv(const Var<T>& x, const Var<T>& k, const ConvGeometry& geom);
template <typename T>
Var<T> conv_input_adjoint(const Var<T>& dy, const Var<T>& k, const ConvGeometry& geom);
template <typename T>
Var<T> conv_kernel_adjoint(const Var<T>& x, const Var<T>& dy, const ConvGeometry& geom);

namespace detail {
inline Shape x_shape(const ConvGeometry& g) { return {g.in_h, g.in_w, g.in_c}; }
inline Shape y_shape(const ConvGeometry& g) { return {g.out_h, g.out_w, g.out_c}; }
inline Shape k_shape(const ConvGeometry& g) { return {g.k_h, g.k_w, g.in_c, g.out_c}; }

template <typename T>
void require_shape(const Var<T>& v, const Shape& want, const char* what) {
  if (v.shape() == want) return;
  std::size_t axis = DimensionError::kNoAxis;
  if (v.shape().size() == want.size())
    for (std::size_t i = 0; i < want.size(); ++i)
      if (v.shape()[i] != want[i]) {
        axis = i;
        break;
      }
  throw DimensionError(std::string(what) + ": expected " + to_string(want) + ", got " +
                           to_string(v.shape()),
                       axis);
}
}  // namespace detail

template <typename T>
Var<T> conv(const Var<T>& x, const Var<T>& k, const ConvGeometry& geom) {
  detail::require_shape(x, detail::x_shape(geom), "conv input");
  detail::require_shape(k, detail::k_shape(geom), "conv kernel");
  Tensor<T> y(detail::y_shape(geom));
  kernels::conv_forward<T>(geom, x.value().data(), k.value().data(), y.data());
  return record<T>(std::move(y), {x, k},
                   [geom](std::span<const Var<T>> in, const Var<T>& g) {
                     return std::vector<Var<T>>{conv_input_adjoint(g, in[1], geom),
                                                conv_kernel_adjoint(in[0], g, geom)};
                   },
                   "conv");
}

template <typename T>
Var<T> conv_input_adjoint(const Var<T>& dy, const Var<T>& k, const ConvGeometry& geom) {
  detail::require_shape(dy, detail::y_shape(geom), "conv_transpose input");
  detail::require_shape(k, detail::k_shape(geom), "conv_transpose kernel");
  Tensor<T> dx(detail::x_shape(geom));
  kernels::conv_input_adjoint<T>(geom, dy.value().data(), k.value().data(), dx.data());
  return record<T>(std::move(dx), {dy, k},
                   [geom](std::span<const Var<T>> in, const Var<T>& u) {
                     return std::vector<Var<T>>{conv(u, in[1], geom),
                                                conv_kernel_adjoint(u, in[0], geom)};
                   },
                   "conv_input_adjoint");
}

template <typename T>
Var<T> conv_kernel_adjoint(const Var<T>& x, const Var<T>& dy, const ConvGeometry& geom) {
  detail::require_shape(x, detail::x_shape(geom), "conv_kernel_adjoint input");
  detail::require_shape(dy, detail::y_shape(geom), "conv_kernel_adjoint upstream");
  Tensor<T> dk(detail::k_shape(geom));
  kernels::conv_kernel_adjoint<T>(geom, x.value().data(), dy.value().data(), dk.data());
  return record<T>(std::move(dk), {x, dy},
                   [geom](std::span<const Var<T>> in, const Var<T>& u) {
                     return std::vector<Var<T>>{conv_input_adjoint(in[1], u, geom),
                                                conv(in[0], u, geom)};
                   },
                   "conv_kernel_adjoint");
}

// ---------------------------------------------------------------------------------------------
// Structural ops

template <typename T>
Var<T> slice(const Var<T>& a, std::size_t axis, std::size_t begin, std::size_t length);
template <typename T>
Var<T> embed(const Var<T>& a, const Shape& full, std::size_t axis, std::size_t begin);

namespace detail {
// Splits a shape around `axis` into (outer, axis extent, inner) for strided copies.
inline std::tuple<std::size_t, std::size_t, std::size_t> split(const Shape& s, std::size_t axis) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  return {outer, s[axis], inner};
}
}  // namespace detail

template <typename T>
Var<T> concat(const std::vector<Var<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw DimensionError("concat: axis out of range", axis);
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const auto& p : parts) {
    if (p.shape().size() != first.size()) throw DimensionError("concat: rank mismatch");
    for (std::size_t i = 0; i < first.size(); ++i)
      if (i != axis && p.shape()[i] != first[i])
        throw DimensionError("concat: " + to_string(p.shape()) + " vs " + to_string(first), i);
    out_shape[axis] += p.shape()[axis];
  }
  Tensor<T> out(out_shape);
  const auto [outer, total, inner] = detail::split(out_shape, axis);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t len = p.shape()[axis];
    const auto& v = p.value();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(v.data().data() + o * len * inner, len * inner,
                  out.data().data() + (o * total + offset) * inner);
    offsets.push_back(offset);
    offset += len;
  }
  return record<T>(std::move(out), parts,
                   [axis, offsets](std::span<const Var<T>> in, const Var<T>& g) {
                     std::vector<Var<T>> grads;
                     grads.reserve(in.size());
                     for (std::size_t i = 0; i < in.size(); ++i)
                       grads.push_back(slice(g, axis, offsets[i], in[i].shape()[axis]));
                     return grads;
                   },
                   "concat");
}

template <typename T>
Var<T> slice(const Var<T>& a, std::size_t axis, std::size_t begin, std::size_t length) {
  const Shape& s = a.shape();
  if (axis >= s.size()) throw DimensionError("slice: axis out of range", axis);
  if (length == 0 || begin + length > s[axis])
    throw DimensionError("slice: range exceeds extent " + std::to_string(s[axis]), axis);
  Shape out_shape = s;
  out_shape[axis] = length;
  Tensor<T> out(out_shape);
  const auto [outer, total, inner] = detail::split(s, axis);
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(a.value().data().data() + (o * total + begin) * inner, length * inner,
                out.data().data() + o * length * inner);
  return record<T>(std::move(out), {a},
                   [axis, begin](std::span<const Var<T>> in, const Var<T>& g) {
                     return std::vector<Var<T>>{embed(g, in[0].shape(), axis, begin)};
                   },
                   "slice");
}

/// Places `a` inside a zero tensor of shape `full` at offset `begin` along `axis`.
template <typename T>
Var<T> embed(const Var<T>& a, const Shape& full, std::size_t axis, std::size_t begin) {
  const std::size_t length = a.shape()[axis];
  Tensor<T> out(full);
  const auto [outer, total, inner] = detail::split(full, axis);
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(a.value().data().data() + o * length * inner, length * inner,
                out.data().data() + (o * total + begin) * inner);
  return record<T>(std::move(out), {a},
                   [axis, begin, length](std::span<const Var<T>>, const Var<T>& g) {
                     return std::vector<Var<T>>{slice(g, axis, begin, length)};
                   },
                   "embed");
}

template <typename T>
Var<T> sum_row_groups(const Var<T>& a, std::size_t factor);

/// Nearest-neighbour repetition along axis 0: each row appears `factor` times.
template <typename T>
Var<T> repeat_rows(const Var<T>& a, std::size_t factor) {
  if (factor == 0) throw DimensionError("repeat_rows: factor must be positive", 0);
  const Shape& s = a.shape();
  Shape out_shape = s;
  out_shape[0] *= factor;
  const std::size_t row = a.size() / s[0];
  Tensor<T> out(out_shape);
  for (std::size_t r = 0; r < out_shape[0]; ++r)
    std::copy_n(a.value().data().data() + (r / factor) * row, row, out.data().data() + r * row);
  return record<T>(std::move(out), {a},
                   [factor](std::span<const Var<T>>, const Var<T>& g) {
                     return std::vector<Var<T>>{sum_row_groups(g, factor)};
                   },
                   "repeat_rows");
}

/// Adjoint of repeat_rows: sums each run of `factor` consecutive rows.
template <typename T>
Var<T> sum_row_groups(const Var<T>& a, std::size_t factor) {
  const Shape& s = a.shape();
  if (factor == 0 || s[0] % factor != 0)
    throw DimensionError("sum_row_groups: rows not divisible by factor", 0);
  Shape out_shape = s;
  out_shape[0] /= factor;
  const std::size_t row = a.size() / s[0];
  Tensor<T> out(out_shape);
  for (std::size_t r = 0; r < s[0]; ++r)
    for (std::size_t i = 0; i < row; ++i) out[(r / factor) * row + i] += a.value()[r * row + i];
  return record<T>(std::move(out), {a},
                   [factor](std::span<const Var<T>>, const Var<T>& g) {
                     return std::vector<Var<T>>{repeat_rows(g, factor)};
                   },
                   "sum_row_groups");
}

template <typename T>
Var<T> reshape(const Var<T>& a, const Shape& shape) {
  return record<T>(a.value().reshaped(shape), {a},
                   [](std::span<const Var<T>> in, const Var<T>& g) {
                     return std::vector<Var<T>>{reshape(g, in[0].shape())};
                   },
                   "reshape");
}

// ---------------------------------------------------------------------------------------------
// Backward

/// Gradients of the scalar `output` with respect to each of `wrt`. A `wrt` entry that the
/// output does not depend on gets an exact zero. With `mode == kDifferentiable` the returned
/// gradients are recorded graph nodes; otherwise they are constants.
template <typename T>
std::vector<Var<T>> gradients(const Var<T>& output, std::span<const Var<T>> wrt,
                              GradMode mode = GradMode::kFirstOrder) {
  if (output.size() != 1)
    throw DimensionError("backward requires a scalar output, got " + to_string(output.shape()));

  // Post-order DFS over nodes that require grad, then walk it in reverse (topological order).
  std::vector<Node<T>*> order;
  std::unordered_map<Node<T>*, bool> visited;
  if (output.requires_grad()) {
    std::vector<std::pair<Node<T>*, std::size_t>> stack{{output.node(), 0}};
    visited[output.node()] = true;
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->inputs.size()) {
        Node<T>* child = n->inputs[next++].node();
        if (child->requires_grad && !visited[child]) {
          visited[child] = true;
          stack.emplace_back(child, 0);
        }
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
  }

  GradModeGuard guard(mode == GradMode::kDifferentiable ? GradMode::kDifferentiable
                                                        : GradMode::kNoGrad);
  std::unordered_map<Node<T>*, Var<T>> grads;
  if (output.requires_grad())
    grads[output.node()] = Var<T>::constant(Tensor<T>(output.shape(), T(1)));

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (!n->backward) continue;
    auto found = grads.find(n);
    if (found == grads.end()) continue;
    const Var<T> upstream = found->second;
    std::vector<Var<T>> in_grads = n->backward(std::span<const Var<T>>(n->inputs), upstream);
    for (std::size_t i = 0; i < n->inputs.size(); ++i) {
      const Var<T>& input = n->inputs[i];
      if (!input.requires_grad() || !in_grads[i].defined()) continue;
      auto [slot, inserted] = grads.try_emplace(input.node(), in_grads[i]);
      if (!inserted) slot->second = add(slot->second, in_grads[i]);
    }
  }

  std::vector<Var<T>> result;
  result.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto found = grads.find(w.node());
    result.push_back(found != grads.end() ? found->second
                                          : Var<T>::constant(Tensor<T>(w.shape(), T(0))));
  }
  return result;
}

/// Differentiable gradient of `output` with respect to an input tensor. Requires the calling
/// thread to be in GradMode::kDifferentiable (the forward graph must have been recorded).
template <typename T>
Var<T> input_gradient(const Var<T>& output, const Var<T>& wrt) {
  if (grad_mode() != GradMode::kDifferentiable)
    throw std::logic_error(
        "input_gradient needs differentiable gradient mode; wrap the forward pass in "
        "GradModeGuard(GradMode::kDifferentiable)");
  std::vector<Var<T>> w{wrt};
  return gradients<T>(output, w, GradMode::kDifferentiable).front();
}

// ---------------------------------------------------------------------------------------------
// Layers

/// conv2d over an [H, W, Cin] input with an [kh, kw, Cin, Cout] kernel.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, std::size_t stride_h,
              std::size_t stride_w, Padding padding) {
  if (x.shape().size() != 3) throw DimensionError("conv2d: input must be [H, W, C]");
  if (kernel.shape().size() != 4) throw DimensionError("conv2d: kernel must be [kh, kw, Cin, Cout]");
  if (kernel.shape()[2] != x.shape()[2])
    throw DimensionError("conv2d: kernel input channels " + std::to_string(kernel.shape()[2]) +
                             " != input channels " + std::to_string(x.shape()[2]),
                         2);
  const auto geom =
      ConvGeometry::for_conv(x.shape()[0], x.shape()[1], x.shape()[2], kernel.shape()[0],
                             kernel.shape()[1], kernel.shape()[3], stride_h, stride_w, padding);
  return add_channels(conv(x, kernel, geom), bias);
}

/// Transposed conv2d over an [h, w, Cin] input with an [kh, kw, Cout, Cin] kernel. Output
/// spatial dims are (h*sh, w*sw) for same padding, ((h-1)*s + k) for valid padding.
template <typename T>
Var<T> conv2d_transpose(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias,
                        std::size_t stride_h, std::size_t stride_w, Padding padding) {
  if (x.shape().size() != 3) throw DimensionError("conv2d_transpose: input must be [H, W, C]");
  if (kernel.shape().size() != 4)
    throw DimensionError("conv2d_transpose: kernel must be [kh, kw, Cout, Cin]");
  if (kernel.shape()[3] != x.shape()[2])
    throw DimensionError("conv2d_transpose: kernel input channels " +
                             std::to_string(kernel.shape()[3]) + " != input channels " +
                             std::to_string(x.shape()[2]),
                         2);
  const auto geom = ConvGeometry::for_transpose(x.shape()[0], x.shape()[1], x.shape()[2],
                                                kernel.shape()[0], kernel.shape()[1],
                                                kernel.shape()[2], stride_h, stride_w, padding);
  return add_channels(conv_input_adjoint(x, kernel, geom), bias);
}

/// Normalizes over all axes of one sample, then applies per-channel gain and offset.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& offset, T eps = T(1e-5)) {
  const std::size_t n = x.size();
  if (n == 0) throw DimensionError("layer_norm: empty normalization axis");
  const T inv_n = T(1) / static_cast<T>(n);
  Var<T> mean = scale(sum(x), inv_n);
  Var<T> centered = add_scalar(x, scale(mean, T(-1)));
  Var<T> var = scale(sum(pow(centered, T(2))), inv_n);
  Var<T> inv_std = pow(add_const(var, eps), T(-0.5));
  Var<T> normed = mul_scalar(centered, inv_std);
  return add_channels(mul_channels(normed, gain), offset);
}

}  // namespace beamcast::ad
