// SPDX-License-Identifier: Apache-2.0
#include "beamcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace beamcast {

RateReport spectral_efficiency(const ComplexMatrix& h, const ComplexMatrix& v, double noise_var) {
  if (h.rows() != v.rows() || h.cols() != v.cols())
    throw DimensionError("spectral_efficiency: H is " + std::to_string(h.rows()) + "x" +
                         std::to_string(h.cols()) + ", V is " + std::to_string(v.rows()) + "x" +
                         std::to_string(v.cols()));
  if (!(noise_var > 0.0)) throw ConfigError("noise variance must be positive");
  const ComplexMatrix g = h.adjoint() * v;  // g(k, j) = h_k^H v_j
  RateReport r;
  r.per_user.resize(static_cast<std::size_t>(h.cols()));
  for (Eigen::Index k = 0; k < g.rows(); ++k) {
    const double signal = std::norm(g(k, k));
    const double interference = g.row(k).squaredNorm() - signal;
    const double rate = std::log2(1.0 + signal / (noise_var + std::max(interference, 0.0)));
    r.per_user[static_cast<std::size_t>(k)] = rate;
    r.sum += rate;
  }
  return r;
}

double nmse_db(const ComplexMatrix& target, const ComplexMatrix& est) {
  const ComplexMatrix t[] = {target};
  const ComplexMatrix e[] = {est};
  return nmse_db(std::span<const ComplexMatrix>(t), std::span<const ComplexMatrix>(e));
}

double nmse_db(std::span<const ComplexMatrix> targets, std::span<const ComplexMatrix> ests) {
  if (targets.size() != ests.size() || targets.empty())
    throw DimensionError("nmse: need equally many targets and estimates");
  double acc = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i].rows() != ests[i].rows() || targets[i].cols() != ests[i].cols())
      throw DimensionError("nmse: shape mismatch at pair " + std::to_string(i));
    const double energy = targets[i].squaredNorm();
    if (!(energy > 0.0)) throw NumericalError("nmse: zero target at pair " + std::to_string(i));
    acc += (targets[i] - ests[i]).squaredNorm() / energy;
  }
  acc /= static_cast<double>(targets.size());
  if (acc <= 0.0) return kNmseFloorDb;
  return std::max(10.0 * std::log10(acc), kNmseFloorDb);
}

ComplexMatrix zero_padding_baseline(const ComplexMatrix& v_low, std::span<const std::size_t> rows,
                                    std::size_t n_high, double power) {
  if (static_cast<std::size_t>(v_low.rows()) != rows.size())
    throw DimensionError("zero_padding_baseline: row map size mismatch");
  ComplexMatrix v = ComplexMatrix::Zero(static_cast<Eigen::Index>(n_high), v_low.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n_high) throw DimensionError("zero_padding_baseline: row out of range");
    v.row(static_cast<Eigen::Index>(rows[i])) = v_low.row(static_cast<Eigen::Index>(i));
  }
  return power_normalize(v, power);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace beamcast
