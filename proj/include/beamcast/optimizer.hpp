// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "beamcast/errors.hpp"
#include "beamcast/parameters.hpp"

namespace beamcast {

struct RmsPropConfig {
  double learning_rate = 1e-3;
  double decay = 0.9;
  double epsilon = 1e-8;
};

/// RMSProp: s <- decay*s + (1-decay)*g^2;  p <- p - lr*g / (sqrt(s) + eps).
template <typename T>
class RmsProp {
 public:
  RmsProp() = default;
  RmsProp(const ParameterSet<T>& params, RmsPropConfig cfg) : cfg_(cfg) {
    accumulators_.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
      accumulators_.emplace_back(params.var(i).shape(), T(0));
  }

  const RmsPropConfig& config() const noexcept { return cfg_; }
  std::vector<Tensor<T>>& accumulators() noexcept { return accumulators_; }
  const std::vector<Tensor<T>>& accumulators() const noexcept { return accumulators_; }

  /// Applies one update. Gradients are matched to parameters by position. A non-finite
  /// gradient throws before any parameter is touched.
  void step(ParameterSet<T>& params, const std::vector<ad::Var<T>>& grads) {
    if (grads.size() != params.size() || accumulators_.size() != params.size())
      throw DimensionError("rmsprop: " + std::to_string(grads.size()) + " gradients for " +
                           std::to_string(params.size()) + " parameters");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (grads[i].shape() != params.var(i).shape())
        throw DimensionError("rmsprop: gradient shape mismatch for " + params.name(i));
      for (T g : grads[i].value().data())
        if (!std::isfinite(g))
          throw NumericalError("rmsprop: non-finite gradient in parameter '" + params.name(i) +
                               "'");
    }
    const T lr = static_cast<T>(cfg_.learning_rate);
    const T rho = static_cast<T>(cfg_.decay);
    const T eps = static_cast<T>(cfg_.epsilon);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params.var(i).mutable_value().data();
      auto s = accumulators_[i].data();
      const auto g = grads[i].value().data();
      for (std::size_t j = 0; j < p.size(); ++j) {
        s[j] = rho * s[j] + (T(1) - rho) * g[j] * g[j];
        p[j] -= lr * g[j] / (std::sqrt(s[j]) + eps);
      }
    }
  }

 private:
  RmsPropConfig cfg_;
  std::vector<Tensor<T>> accumulators_;
};

}  // namespace beamcast
