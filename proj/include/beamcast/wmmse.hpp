// SPDX-License-Identifier: Apache-2.0
//
// Weighted MMSE sum-rate maximization for multi-user MISO downlink with a total power budget.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "beamcast/channel_sim.hpp"
#include "beamcast/complex_matrix.hpp"

namespace beamcast {

enum class WmmseInit { kMatchedFilter, kRandom };

struct WmmseConfig {
  double power = 1.0;
  double noise_var = 0.1;
  double epsilon = 1e-4;  // stop when |R(t) - R(t-1)| < epsilon (bits/s/Hz)
  int max_iterations = 200;
  double bisection_tol = 1e-10;  // relative power error accepted by the mu search
  int bisection_max_steps = 200;
  WmmseInit init = WmmseInit::kMatchedFilter;
  std::uint64_t init_seed = 0;

  void validate() const;
  /// noise_var = power / 10^(snr_db/10).
  static WmmseConfig from_snr_db(double snr_db, double power = 1.0);
};

struct WmmseResult {
  ComplexMatrix v;
  std::vector<double> rate_trace;  // sum rate of the initial point, then after each iteration
  int iterations = 0;
  double mu = 0.0;  // multiplier of the final precoder update
  bool converged = false;
};

/// Smallest multiplier tried; stands in for mu = 0 when the unconstrained update is feasible.
constexpr double kMuMin = 1e-12;

/// Matched filter v_k = h_k / ||h_k|| with the budget split equally over users.
ComplexMatrix matched_filter_init(const ComplexMatrix& h, double power);

WmmseResult wmmse_solve(const ComplexMatrix& h, const WmmseConfig& cfg,
                        const std::optional<ComplexMatrix>& init = std::nullopt);

/// Fills v_real (from h_real) and v_low (from h_low) for every sample. Parallel over samples.
void label_dataset(Dataset& ds, const WmmseConfig& cfg);

}  // namespace beamcast
