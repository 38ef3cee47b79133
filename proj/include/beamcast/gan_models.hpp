// SPDX-License-Identifier: Apache-2.0
//
// Conditional generator (low-dimensional beamformer -> high-dimensional beamformer) and
// Wasserstein critic built from the autodiff layers.
//
// Complex N x N_r matrices enter the networks as [N, N_r, 2] tensors (real, imaginary).
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "beamcast/autodiff.hpp"
#include "beamcast/complex_matrix.hpp"
#include "beamcast/errors.hpp"
#include "beamcast/parameters.hpp"
#include "beamcast/random.hpp"

namespace beamcast {

enum class BlockKind { kEncoder, kDecoder, kConv };

/// One conv block: conv (or transposed conv) -> optional layer norm -> optional leaky relu.
struct BlockSpec {
  std::string name;
  BlockKind kind = BlockKind::kEncoder;
  std::size_t in_channels = 0;
  std::size_t width = 0;
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  bool norm = true;
  bool activation = true;
};

struct GanWidths {
  std::vector<std::size_t> resize{64, 64, 64};  // decoder, decoder, encoder
  std::vector<std::size_t> encoders{64, 128, 128, 256, 256};
  std::vector<std::size_t> decoders{256, 128, 128, 64};
  std::size_t disc_first = 64;
  std::vector<std::size_t> disc_encoders{64, 128, 256, 256};

  /// Every width multiplied by `factor`, rounded, at least 1.
  GanWidths scaled(double factor) const;
};

struct GanShape {
  std::size_t n_low = 8;
  std::size_t n_high = 32;
  std::size_t n_users = 4;
  std::size_t kernel = 3;
  double leaky_slope = 0.2;
  GanWidths widths;

  std::size_t factor() const;
  void validate() const;
};

struct GenArch {
  GanShape shape;
  std::vector<BlockSpec> resize;
  std::vector<BlockSpec> encoders;
  std::vector<BlockSpec> decoders;
  BlockSpec final_conv;
  /// decoder j takes (previous output) ++ repeat(encoder skip_source[j]) on the channel axis.
  std::vector<std::size_t> skip_source;
  /// Row repetition applied to the skip tap so it matches the decoder input rows.
  std::vector<std::size_t> skip_repeat;
};

struct DiscArch {
  GanShape shape;
  std::vector<BlockSpec> blocks;  // first conv, encoders, final conv
};

GenArch make_generator_arch(const GanShape& shape);
DiscArch make_discriminator_arch(const GanShape& shape);

/// Learnable scalars implied by a block table (kernels, biases, layer-norm gain/offset).
std::size_t parameter_count(const std::vector<BlockSpec>& blocks, std::size_t kernel);
std::size_t parameter_count(const GenArch& arch);
std::size_t parameter_count(const DiscArch& arch);

/// Test hook: zeroes individual skip taps before they are merged.
struct GenOptions {
  std::vector<bool> ablate_skip;  // indexed like GenArch::decoders; empty = none
};

namespace detail {

template <typename T>
void add_block_params(ParameterSet<T>& params, const BlockSpec& b, std::size_t k, Rng& rng) {
  const std::size_t fan_in = k * k * b.in_channels;
  std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  const Shape kshape = b.kind == BlockKind::kDecoder ? Shape{k, k, b.width, b.in_channels}
                                                     : Shape{k, k, b.in_channels, b.width};
  Tensor<T> kernel(kshape);
  for (auto& v : kernel.data()) v = static_cast<T>(he(rng));
  params.add(b.name + "/kernel", std::move(kernel));
  params.add(b.name + "/bias", Tensor<T>(Shape{b.width}, T(0)));
  if (b.norm) {
    params.add(b.name + "/ln_gain", Tensor<T>(Shape{b.width}, T(1)));
    params.add(b.name + "/ln_offset", Tensor<T>(Shape{b.width}, T(0)));
  }
}

template <typename T>
ad::Var<T> apply_block(const ParameterSet<T>& params, const BlockSpec& b, const ad::Var<T>& x,
                       T slope) {
  const auto& kernel = params[b.name + "/kernel"];
  const auto& bias = params[b.name + "/bias"];
  ad::Var<T> y = b.kind == BlockKind::kDecoder
                     ? ad::conv2d_transpose(x, kernel, bias, b.stride_h, b.stride_w, Padding::kSame)
                     : ad::conv2d(x, kernel, bias, b.stride_h, b.stride_w, Padding::kSame);
  if (b.norm) y = ad::layer_norm(y, params[b.name + "/ln_gain"], params[b.name + "/ln_offset"]);
  if (b.activation) y = ad::leaky_relu(y, slope);
  return y;
}

/// Conditioning input rescaled to unit mean-square per complex entry (treated as a constant
/// factor; all-zero inputs pass through).
template <typename T>
ad::Var<T> unit_rms(const ad::Var<T>& c) {
  double e = 0;
  for (const T v : c.value().data()) e += static_cast<double>(v) * static_cast<double>(v);
  if (!(e > 0.0)) return c;
  const double entries = static_cast<double>(c.value().size()) / 2.0;
  return ad::scale(c, static_cast<T>(std::sqrt(entries / e)));
}

template <typename T>
void require_dims(const ad::Var<T>& v, std::size_t rows, std::size_t cols, const char* what) {
  const Shape want{rows, cols, 2};
  if (v.shape() != want)
    throw DimensionError(std::string(what) + ": expected " + to_string(want) + ", got " +
                         to_string(v.shape()));
}

}  // namespace detail

template <typename T>
ParameterSet<T> init_generator(const GenArch& arch, std::uint64_t seed) {
  Rng rng(seed);
  ParameterSet<T> params;
  for (const auto* group : {&arch.resize, &arch.encoders, &arch.decoders})
    for (const auto& b : *group) detail::add_block_params(params, b, arch.shape.kernel, rng);
  detail::add_block_params(params, arch.final_conv, arch.shape.kernel, rng);
  return params;
}

template <typename T>
ParameterSet<T> init_discriminator(const DiscArch& arch, std::uint64_t seed) {
  Rng rng(seed);
  ParameterSet<T> params;
  for (const auto& b : arch.blocks) detail::add_block_params(params, b, arch.shape.kernel, rng);
  return params;
}

/// Differentiable Tr(V^H V) = power rescaling of a [N, N_r, 2] tensor.
template <typename T>
ad::Var<T> power_normalize(const ad::Var<T>& v, double power) {
  if (!(power > 0.0)) throw ConfigError("power budget must be positive");
  const ad::Var<T> energy = ad::sum(ad::pow(v, T(2)));
  if (!(energy.value()[0] > T(0)))
    throw NumericalError("power_normalize: all-zero generator output");
  const ad::Var<T> gain = ad::scale(ad::pow(energy, T(-0.5)), static_cast<T>(std::sqrt(power)));
  return ad::mul_scalar(v, gain);
}

/// Nearest-neighbour repetition of each antenna row `factor` times.
template <typename T>
ad::Var<T> upsample_condition(const ad::Var<T>& v_low, std::size_t factor) {
  if (factor == 0) throw DimensionError("upsample factor must be a positive integer", 0);
  return factor == 1 ? v_low : ad::repeat_rows(v_low, factor);
}

/// Generator output before power normalization, [N_high, N_r, 2].
template <typename T>
ad::Var<T> generator_raw(const GenArch& arch, const ParameterSet<T>& params, const ad::Var<T>& z,
                         const ad::Var<T>& v_low, const ad::Var<T>& h_low,
                         const GenOptions& opts = {}) {
  const auto& s = arch.shape;
  detail::require_dims(z, s.n_low, s.n_users, "generator noise");
  detail::require_dims(v_low, s.n_low, s.n_users, "generator V_low");
  detail::require_dims(h_low, s.n_low, s.n_users, "generator H_low");
  const T slope = static_cast<T>(s.leaky_slope);

  ad::Var<T> x = ad::concat<T>({z, detail::unit_rms(v_low), detail::unit_rms(h_low)}, 2);
  for (const auto& b : arch.resize) x = detail::apply_block(params, b, x, slope);
  std::vector<ad::Var<T>> taps;
  for (const auto& b : arch.encoders) {
    x = detail::apply_block(params, b, x, slope);
    taps.push_back(x);
  }
  for (std::size_t j = 0; j < arch.decoders.size(); ++j) {
    ad::Var<T> tap = taps[arch.skip_source[j]];
    if (j < opts.ablate_skip.size() && opts.ablate_skip[j])
      tap = ad::Var<T>::constant(Tensor<T>(tap.shape(), T(0)));
    if (arch.skip_repeat[j] > 1) tap = ad::repeat_rows(tap, arch.skip_repeat[j]);
    x = detail::apply_block(params, arch.decoders[j], ad::concat<T>({x, tap}, 2), slope);
  }
  return detail::apply_block(params, arch.final_conv, x, slope);
}

/// V_high = power_normalize(G(Z | V_low, H_low)).
template <typename T>
ad::Var<T> generator_forward(const GenArch& arch, const ParameterSet<T>& params,
                             const ad::Var<T>& z, const ad::Var<T>& v_low,
                             const ad::Var<T>& h_low, double power, const GenOptions& opts = {}) {
  return power_normalize(generator_raw(arch, params, z, v_low, h_low, opts), power);
}

/// Scalar critic value D(V | V_low), shape [1].
template <typename T>
ad::Var<T> discriminator_forward(const DiscArch& arch, const ParameterSet<T>& params,
                                 const ad::Var<T>& v, const ad::Var<T>& v_low) {
  const auto& s = arch.shape;
  detail::require_dims(v, s.n_high, s.n_users, "critic input");
  detail::require_dims(v_low, s.n_low, s.n_users, "critic V_low");
  const T slope = static_cast<T>(s.leaky_slope);
  ad::Var<T> x = ad::concat<T>({v, upsample_condition(v_low, s.factor())}, 2);
  for (const auto& b : arch.blocks) x = detail::apply_block(params, b, x, slope);
  return ad::sum(x);
}

/// Standard normal noise tensor [rows, cols, 2].
template <typename T>
Tensor<T> normal_tensor(const Shape& shape, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor<T> t(shape);
  for (auto& v : t.data()) v = static_cast<T>(n(rng));
  return t;
}

}  // namespace beamcast
