// SPDX-License-Identifier: Apache-2.0
#include "beamcast/conv_kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <string>
#include <vector>

#include "beamcast/errors.hpp"

namespace beamcast {

namespace {

std::size_t same_pad_before(std::size_t in, std::size_t out, std::size_t k, std::size_t s) {
  const long total = static_cast<long>((out - 1) * s + k) - static_cast<long>(in);
  return total > 0 ? static_cast<std::size_t>(total / 2) : 0;
}

void check_positive(std::size_t v, const char* what, std::size_t axis) {
  if (v == 0) throw DimensionError(std::string(what) + " must be positive", axis);
}

}  // namespace

ConvGeometry ConvGeometry::for_conv(std::size_t in_h, std::size_t in_w, std::size_t in_c,
                                    std::size_t k_h, std::size_t k_w, std::size_t out_c,
                                    std::size_t stride_h, std::size_t stride_w,
                                    Padding padding) {
  check_positive(in_h, "input height", 0);
  check_positive(in_w, "input width", 1);
  check_positive(in_c, "input channels", 2);
  check_positive(k_h, "kernel height", 0);
  check_positive(k_w, "kernel width", 1);
  check_positive(out_c, "output channels", 3);
  check_positive(stride_h, "stride", 0);
  check_positive(stride_w, "stride", 1);

  ConvGeometry g;
  g.in_h = in_h;
  g.in_w = in_w;
  g.in_c = in_c;
  g.out_c = out_c;
  g.k_h = k_h;
  g.k_w = k_w;
  g.stride_h = stride_h;
  g.stride_w = stride_w;
  if (padding == Padding::kSame) {
    g.out_h = (in_h + stride_h - 1) / stride_h;
    g.out_w = (in_w + stride_w - 1) / stride_w;
    g.pad_top = same_pad_before(in_h, g.out_h, k_h, stride_h);
    g.pad_left = same_pad_before(in_w, g.out_w, k_w, stride_w);
    const std::size_t padded_h = std::max(in_h, (g.out_h - 1) * stride_h + k_h);
    const std::size_t padded_w = std::max(in_w, (g.out_w - 1) * stride_w + k_w);
    if (k_h > padded_h) throw DimensionError("kernel taller than padded input", 0);
    if (k_w > padded_w) throw DimensionError("kernel wider than padded input", 1);
  } else {
    if (k_h > in_h)
      throw DimensionError("kernel height " + std::to_string(k_h) + " exceeds input height " +
                               std::to_string(in_h),
                           0);
    if (k_w > in_w)
      throw DimensionError("kernel width " + std::to_string(k_w) + " exceeds input width " +
                               std::to_string(in_w),
                           1);
    g.out_h = (in_h - k_h) / stride_h + 1;
    g.out_w = (in_w - k_w) / stride_w + 1;
  }
  return g;
}

ConvGeometry ConvGeometry::for_transpose(std::size_t h, std::size_t w, std::size_t c_small,
                                         std::size_t k_h, std::size_t k_w, std::size_t c_big,
                                         std::size_t stride_h, std::size_t stride_w,
                                         Padding padding) {
  check_positive(h, "input height", 0);
  check_positive(w, "input width", 1);
  check_positive(stride_h, "stride", 0);
  check_positive(stride_w, "stride", 1);
  std::size_t big_h, big_w;
  if (padding == Padding::kSame) {
    big_h = h * stride_h;
    big_w = w * stride_w;
  } else {
    big_h = (h - 1) * stride_h + k_h;
    big_w = (w - 1) * stride_w + k_w;
  }
  ConvGeometry g = for_conv(big_h, big_w, c_big, k_h, k_w, c_small, stride_h, stride_w, padding);
  if (g.out_h != h) throw DimensionError("transpose geometry does not invert", 0);
  if (g.out_w != w) throw DimensionError("transpose geometry does not invert", 1);
  return g;
}

namespace kernels {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// cols[p, (i*k_w + j)*in_c + ci] = x[tap(p, i, j), ci] or 0 outside the image.
template <typename T>
void im2col(const ConvGeometry& g, std::span<const T> x, std::vector<T>& cols) {
  const std::size_t row_len = g.k_h * g.k_w * g.in_c;
  cols.assign(g.out_h * g.out_w * row_len, T(0));
  const long oh_n = static_cast<long>(g.out_h);
#pragma omp parallel for if (g.out_h * g.out_w * row_len > (1u << 16))
  for (long oh = 0; oh < oh_n; ++oh) {
    for (std::size_t ow = 0; ow < g.out_w; ++ow) {
      T* row = cols.data() + (static_cast<std::size_t>(oh) * g.out_w + ow) * row_len;
      for (std::size_t i = 0; i < g.k_h; ++i) {
        const long ih = oh * static_cast<long>(g.stride_h) + static_cast<long>(i) -
                        static_cast<long>(g.pad_top);
        if (ih < 0 || ih >= static_cast<long>(g.in_h)) continue;
        for (std::size_t j = 0; j < g.k_w; ++j) {
          const long iw = static_cast<long>(ow * g.stride_w + j) - static_cast<long>(g.pad_left);
          if (iw < 0 || iw >= static_cast<long>(g.in_w)) continue;
          const T* src = x.data() + (static_cast<std::size_t>(ih) * g.in_w + iw) * g.in_c;
          std::copy(src, src + g.in_c, row + (i * g.k_w + j) * g.in_c);
        }
      }
    }
  }
}

// Scatter-add of im2col rows back onto the image. Parallel over output rows would race on
// overlapping taps, so this stays serial; it is O(size of cols) and cheap next to the GEMM.
template <typename T>
void col2im(const ConvGeometry& g, const std::vector<T>& cols, std::span<T> x) {
  std::fill(x.begin(), x.end(), T(0));
  const std::size_t row_len = g.k_h * g.k_w * g.in_c;
  for (std::size_t oh = 0; oh < g.out_h; ++oh) {
    for (std::size_t ow = 0; ow < g.out_w; ++ow) {
      const T* row = cols.data() + (oh * g.out_w + ow) * row_len;
      for (std::size_t i = 0; i < g.k_h; ++i) {
        const long ih = static_cast<long>(oh * g.stride_h + i) - static_cast<long>(g.pad_top);
        if (ih < 0 || ih >= static_cast<long>(g.in_h)) continue;
        for (std::size_t j = 0; j < g.k_w; ++j) {
          const long iw = static_cast<long>(ow * g.stride_w + j) - static_cast<long>(g.pad_left);
          if (iw < 0 || iw >= static_cast<long>(g.in_w)) continue;
          T* dst = x.data() + (static_cast<std::size_t>(ih) * g.in_w + iw) * g.in_c;
          const T* src = row + (i * g.k_w + j) * g.in_c;
          for (std::size_t c = 0; c < g.in_c; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

template <typename T>
void check_sizes(const ConvGeometry& g, std::size_t x, std::size_t k, std::size_t y) {
  if (x != g.in_size()) throw DimensionError("conv input buffer size mismatch");
  if (k != g.kernel_size()) throw DimensionError("conv kernel buffer size mismatch");
  if (y != g.out_size()) throw DimensionError("conv output buffer size mismatch");
}

}  // namespace

template <typename T>
void conv_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> k,
                  std::span<T> y) {
  check_sizes<T>(g, x.size(), k.size(), y.size());
  const Eigen::Index positions = static_cast<Eigen::Index>(g.out_h * g.out_w);
  const Eigen::Index row_len = static_cast<Eigen::Index>(g.k_h * g.k_w * g.in_c);
  const Eigen::Index cout = static_cast<Eigen::Index>(g.out_c);
  Eigen::Map<const RowMat<T>> kmat(k.data(), row_len, cout);
  Eigen::Map<RowMat<T>> ymat(y.data(), positions, cout);
  if (g.k_h == 1 && g.k_w == 1 && g.stride_h == 1 && g.stride_w == 1 && g.pad_top == 0 &&
      g.pad_left == 0) {
    Eigen::Map<const RowMat<T>> xmat(x.data(), positions, row_len);
    ymat.noalias() = xmat * kmat;
    return;
  }
  std::vector<T> cols;
  im2col(g, x, cols);
  Eigen::Map<const RowMat<T>> cmat(cols.data(), positions, row_len);
  ymat.noalias() = cmat * kmat;
}

template <typename T>
void conv_input_adjoint(const ConvGeometry& g, std::span<const T> dy, std::span<const T> k,
                        std::span<T> dx) {
  check_sizes<T>(g, dx.size(), k.size(), dy.size());
  const Eigen::Index positions = static_cast<Eigen::Index>(g.out_h * g.out_w);
  const Eigen::Index row_len = static_cast<Eigen::Index>(g.k_h * g.k_w * g.in_c);
  const Eigen::Index cout = static_cast<Eigen::Index>(g.out_c);
  Eigen::Map<const RowMat<T>> kmat(k.data(), row_len, cout);
  Eigen::Map<const RowMat<T>> gmat(dy.data(), positions, cout);
  if (g.k_h == 1 && g.k_w == 1 && g.stride_h == 1 && g.stride_w == 1 && g.pad_top == 0 &&
      g.pad_left == 0) {
    Eigen::Map<RowMat<T>> xmat(dx.data(), positions, row_len);
    xmat.noalias() = gmat * kmat.transpose();
    return;
  }
  std::vector<T> cols(static_cast<std::size_t>(positions * row_len));
  Eigen::Map<RowMat<T>> cmat(cols.data(), positions, row_len);
  cmat.noalias() = gmat * kmat.transpose();
  col2im(g, cols, dx);
}

template <typename T>
void conv_kernel_adjoint(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy,
                         std::span<T> dk) {
  check_sizes<T>(g, x.size(), dk.size(), dy.size());
  const Eigen::Index positions = static_cast<Eigen::Index>(g.out_h * g.out_w);
  const Eigen::Index row_len = static_cast<Eigen::Index>(g.k_h * g.k_w * g.in_c);
  const Eigen::Index cout = static_cast<Eigen::Index>(g.out_c);
  Eigen::Map<const RowMat<T>> gmat(dy.data(), positions, cout);
  Eigen::Map<RowMat<T>> kmat(dk.data(), row_len, cout);
  std::vector<T> cols;
  im2col(g, x, cols);
  Eigen::Map<const RowMat<T>> cmat(cols.data(), positions, row_len);
  kmat.noalias() = cmat.transpose() * gmat;
}

template void conv_forward<float>(const ConvGeometry&, std::span<const float>,
                                  std::span<const float>, std::span<float>);
template void conv_forward<double>(const ConvGeometry&, std::span<const double>,
                                   std::span<const double>, std::span<double>);
template void conv_input_adjoint<float>(const ConvGeometry&, std::span<const float>,
                                        std::span<const float>, std::span<float>);
template void conv_input_adjoint<double>(const ConvGeometry&, std::span<const double>,
                                         std::span<const double>, std::span<double>);
template void conv_kernel_adjoint<float>(const ConvGeometry&, std::span<const float>,
                                         std::span<const float>, std::span<float>);
template void conv_kernel_adjoint<double>(const ConvGeometry&, std::span<const double>,
                                          std::span<const double>, std::span<double>);

}  // namespace kernels

namespace reference {

namespace {

// Visits every (output position, kernel tap, in-channel, out-channel) tuple whose input tap is
// inside the image, in a fixed serial order.
template <typename F>
void for_each_tap(const ConvGeometry& g, F&& f) {
  for (std::size_t oh = 0; oh < g.out_h; ++oh)
    for (std::size_t ow = 0; ow < g.out_w; ++ow)
      for (std::size_t i = 0; i < g.k_h; ++i)
        for (std::size_t j = 0; j < g.k_w; ++j) {
          const long ih = static_cast<long>(oh * g.stride_h + i) - static_cast<long>(g.pad_top);
          const long iw = static_cast<long>(ow * g.stride_w + j) - static_cast<long>(g.pad_left);
          if (ih < 0 || iw < 0 || ih >= static_cast<long>(g.in_h) ||
              iw >= static_cast<long>(g.in_w))
            continue;
          for (std::size_t ci = 0; ci < g.in_c; ++ci)
            for (std::size_t co = 0; co < g.out_c; ++co) {
              const std::size_t xi = (static_cast<std::size_t>(ih) * g.in_w + iw) * g.in_c + ci;
              const std::size_t ki = ((i * g.k_w + j) * g.in_c + ci) * g.out_c + co;
              const std::size_t yi = (oh * g.out_w + ow) * g.out_c + co;
              f(xi, ki, yi);
            }
        }
}

}  // namespace

template <typename T>
void conv_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> k,
                  std::span<T> y) {
  std::fill(y.begin(), y.end(), T(0));
  for_each_tap(g, [&](std::size_t xi, std::size_t ki, std::size_t yi) { y[yi] += x[xi] * k[ki]; });
}

template <typename T>
void conv_input_adjoint(const ConvGeometry& g, std::span<const T> dy, std::span<const T> k,
                        std::span<T> dx) {
  std::fill(dx.begin(), dx.end(), T(0));
  for_each_tap(g,
               [&](std::size_t xi, std::size_t ki, std::size_t yi) { dx[xi] += dy[yi] * k[ki]; });
}

template <typename T>
void conv_kernel_adjoint(const ConvGeometry& g, std::span<const T> x, std::span<const T> dy,
                         std::span<T> dk) {
  std::fill(dk.begin(), dk.end(), T(0));
  for_each_tap(g,
               [&](std::size_t xi, std::size_t ki, std::size_t yi) { dk[ki] += x[xi] * dy[yi]; });
}

template void conv_forward<float>(const ConvGeometry&, std::span<const float>,
                                  std::span<const float>, std::span<float>);
template void conv_forward<double>(const ConvGeometry&, std::span<const double>,
                                   std::span<const double>, std::span<double>);
template void conv_input_adjoint<float>(const ConvGeometry&, std::span<const float>,
                                        std::span<const float>, std::span<float>);
template void conv_input_adjoint<double>(const ConvGeometry&, std::span<const double>,
                                         std::span<const double>, std::span<double>);
template void conv_kernel_adjoint<float>(const ConvGeometry&, std::span<const float>,
                                         std::span<const float>, std::span<float>);
template void conv_kernel_adjoint<double>(const ConvGeometry&, std::span<const double>,
                                          std::span<const double>, std::span<double>);

}  // namespace reference

}  // namespace beamcast
