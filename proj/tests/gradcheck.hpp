// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference gradient checker shared by the unit and acceptance suites.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "beamcast/autodiff.hpp"

namespace beamcast::testing {

using VarD = ad::Var<double>;

inline Tensor<double> random_tensor(const Shape& shape, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor<double> t(shape);
  for (auto& v : t.data()) v = n(rng);
  return t;
}

struct GradCheckResult {
  double max_rel_error = 0.0;  // worst per-leaf ||analytic - numeric|| / max(||analytic||, ||numeric||)
  std::size_t checked = 0;
};

/// Compares analytic gradients of `f(leaves)` against central differences. When
/// `max_entries_per_leaf` is nonzero, only that many randomly chosen entries per leaf are probed.
inline GradCheckResult grad_check(const std::function<VarD(const std::vector<VarD>&)>& f,
                                  std::vector<VarD> leaves, double step = 1e-5,
                                  std::size_t max_entries_per_leaf = 0,
                                  std::uint64_t probe_seed = 1) {
  const VarD out = f(leaves);
  const auto analytic = ad::gradients<double>(out, leaves);
  std::mt19937_64 rng(probe_seed);
  GradCheckResult result;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    auto& x = leaves[l].mutable_value();
    std::vector<std::size_t> idx(x.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (max_entries_per_leaf && idx.size() > max_entries_per_leaf) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(max_entries_per_leaf);
    }
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i : idx) {
      const double orig = x[i];
      const double h = step * std::max(1.0, std::abs(orig));
      x[i] = orig + h;
      const double fp = f(leaves).value()[0];
      x[i] = orig - h;
      const double fm = f(leaves).value()[0];
      x[i] = orig;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[l].value()[i];
      diff2 += (a - numeric) * (a - numeric);
      a2 += a * a;
      n2 += numeric * numeric;
      ++result.checked;
    }
    const double denom = std::max(std::sqrt(std::max(a2, n2)), 1e-12);
    result.max_rel_error = std::max(result.max_rel_error, std::sqrt(diff2) / denom);
  }
  return result;
}

/// <op(x), r> for a fixed random projection r turns any op into a scalar for gradient checks.
inline VarD project(const VarD& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ad::sum(ad::mul(y, VarD::constant(random_tensor(y.shape(), rng))));
}

}  // namespace beamcast::testing
