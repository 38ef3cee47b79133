// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

namespace beamcast {

enum class Padding { kSame, kValid };

/// Geometry of a strided 2-D convolution mapping an [in_h, in_w, in_c] image ("x-space")
/// to an [out_h, out_w, out_c] image ("y-space") with an [k_h, k_w, in_c, out_c] kernel.
///
///   y[oh, ow, co] = sum_{i, j, ci} x[oh*stride_h + i - pad_top, ow*stride_w + j - pad_left, ci]
///                                  * k[i, j, ci, co]
///
/// Out-of-range x taps read as zero. A transposed convolution is the adjoint of the same
/// geometry, mapping y-space back to x-space.
struct ConvGeometry {
  std::size_t in_h = 0, in_w = 0, in_c = 0;
  std::size_t out_h = 0, out_w = 0, out_c = 0;
  std::size_t k_h = 0, k_w = 0;
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t pad_top = 0, pad_left = 0;

  std::size_t in_size() const { return in_h * in_w * in_c; }
  std::size_t out_size() const { return out_h * out_w * out_c; }
  std::size_t kernel_size() const { return k_h * k_w * in_c * out_c; }

  bool operator==(const ConvGeometry&) const = default;

  /// Geometry of a convolution applied to an [in_h, in_w, in_c] input. Throws
  /// DimensionError when the kernel exceeds the padded input on some axis.
  static ConvGeometry for_conv(std::size_t in_h, std::size_t in_w, std::size_t in_c,
                               std::size_t k_h, std::size_t k_w, std::size_t out_c,
                               std::size_t stride_h, std::size_t stride_w, Padding padding);

  /// Geometry whose adjoint upsamples an [h, w, c_small] input by the strides into an
  /// image with `c_big` channels. `x-space` is the upsampled side.
  static ConvGeometry for_transpose(std::size_t h, std::size_t w, std::size_t c_small,
                                    std::size_t k_h, std::size_t k_w, std::size_t c_big,
                                    std::size_t stride_h, std::size_t stride_w, Padding padding);
};

// The three bilinear maps derived from the trilinear form <conv(x, k), g>. Outputs are
// overwritten, not accumulated.
namespace kernels {

/// y = conv(x, k). im2col + GEMM; im2col is OpenMP-parallel over output rows.
template <typename T>
void conv_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> k,
                  std::span<T> y);

/// dx = adjoint of conv in x, i.e. transposed convolution of `dy` with `k`.
template <typename T>
void conv_input_adjoint(const ConvGeometry& g, std::span<const T> dy, std::span<const T> k,
                        std::span<T> dx);

/// dk = adjoint of conv in k.
template <typename T>
void conv_kernel_adjoint(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy,
                         std::span<T> dk);

}  // namespace kernels

// Direct loop implementations, serial. Kept as the test oracle and benchmark baseline.
namespace reference {

template <typename T>
void conv_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> k,
                  std::span<T> y);

template <typename T>
void conv_input_adjoint(const ConvGeometry& g, std::span<const T> dy, std::span<const T> k,
                        std::span<T> dx);

template <typename T>
void conv_kernel_adjoint(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy,
                         std::span<T> dk);

}  // namespace reference

}  // namespace beamcast
