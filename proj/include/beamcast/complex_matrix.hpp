// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <complex>

#include "beamcast/errors.hpp"
#include "beamcast/tensor.hpp"

namespace beamcast {

using cdouble = std::complex<double>;
/// Channels H (N_t x N_r, column k = h_k) and beamformers V (N_t x N_r, column k = v_k).
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

/// Tr(V^H V).
inline double total_power(const ComplexMatrix& v) { return v.squaredNorm(); }

/// Scales V by a positive real so that Tr(V^H V) = power.
inline ComplexMatrix power_normalize(const ComplexMatrix& v, double power) {
  const double energy = total_power(v);
  if (!(energy > 0.0)) throw NumericalError("power_normalize: all-zero beamformer");
  return v * std::sqrt(power / energy);
}

/// [rows, cols, 2] real/imag tensor view of a complex matrix.
template <typename T>
Tensor<T> to_tensor(const ComplexMatrix& m) {
  Tensor<T> t(Shape{static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()), 2});
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      t.at(r, c, 0) = static_cast<T>(m(r, c).real());
      t.at(r, c, 1) = static_cast<T>(m(r, c).imag());
    }
  return t;
}

template <typename T>
ComplexMatrix from_tensor(const Tensor<T>& t) {
  if (t.rank() != 3 || t.dim(2) != 2)
    throw DimensionError("complex tensor must be [rows, cols, 2], got " + to_string(t.shape()));
  ComplexMatrix m(t.dim(0), t.dim(1));
  for (std::size_t r = 0; r < t.dim(0); ++r)
    for (std::size_t c = 0; c < t.dim(1); ++c)
      m(r, c) = cdouble(static_cast<double>(t.at(r, c, 0)), static_cast<double>(t.at(r, c, 1)));
  return m;
}

}  // namespace beamcast
