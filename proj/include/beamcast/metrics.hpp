// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "beamcast/complex_matrix.hpp"

namespace beamcast {

struct RateReport {
  std::vector<double> per_user;  // bits/s/Hz
  double sum = 0.0;
};

/// R_k = log2(1 + |h_k^H v_k|^2 / (noise_var + sum_{j!=k} |h_k^H v_j|^2)).
RateReport spectral_efficiency(const ComplexMatrix& h, const ComplexMatrix& v, double noise_var);

inline double sum_rate(const ComplexMatrix& h, const ComplexMatrix& v, double noise_var) {
  return spectral_efficiency(h, v, noise_var).sum;
}

constexpr double kNmseFloorDb = -120.0;

/// 10 log10(||target - est||^2 / ||target||^2), clamped below at kNmseFloorDb.
double nmse_db(const ComplexMatrix& target, const ComplexMatrix& est);

/// 10 log10 of the mean per-pair error ratio over a set of pairs, clamped like nmse_db.
double nmse_db(std::span<const ComplexMatrix> targets, std::span<const ComplexMatrix> ests);

/// Weak reference: V_low on the subset rows, zeros elsewhere, renormalized to `power`.
ComplexMatrix zero_padding_baseline(const ComplexMatrix& v_low, std::span<const std::size_t> rows,
                                    std::size_t n_high, double power);

double db_to_linear(double db);

}  // namespace beamcast
