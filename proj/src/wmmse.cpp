// SPDX-License-Identifier: Apache-2.0
#include "beamcast/wmmse.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <string>

#include "beamcast/metrics.hpp"

namespace beamcast {

void WmmseConfig::validate() const {
  if (!(power > 0.0)) throw ConfigError("wmmse: power must be positive");
  if (!(noise_var > 0.0)) throw ConfigError("wmmse: noise variance must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("wmmse: epsilon must be in (0, 1)");
  if (max_iterations <= 0) throw ConfigError("wmmse: max_iterations must be positive");
  if (!(bisection_tol > 0.0)) throw ConfigError("wmmse: bisection tolerance must be positive");
  if (bisection_max_steps <= 0) throw ConfigError("wmmse: bisection steps must be positive");
}

WmmseConfig WmmseConfig::from_snr_db(double snr_db, double power) {
  WmmseConfig cfg;
  cfg.power = power;
  cfg.noise_var = power / db_to_linear(snr_db);
  return cfg;
}

ComplexMatrix matched_filter_init(const ComplexMatrix& h, double power) {
  ComplexMatrix v = ComplexMatrix::Zero(h.rows(), h.cols());
  const double per_user = power / static_cast<double>(h.cols());
  for (Eigen::Index k = 0; k < h.cols(); ++k) {
    const double n = h.col(k).norm();
    if (n > 0.0) v.col(k) = h.col(k) * (std::sqrt(per_user) / n);
  }
  return v;
}

namespace {

ComplexMatrix random_init(const ComplexMatrix& h, double power, std::uint64_t seed) {
  Rng rng(seed);
  ComplexMatrix v(h.rows(), h.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c)
    for (Eigen::Index r = 0; r < v.rows(); ++r) v(r, c) = complex_normal(rng);
  return power_normalize(v, power);
}

// Precoder update for fixed receivers u and weights w:
//   V(mu) = (A + mu I)^-1 B,  A = sum_j w_j |u_j|^2 h_j h_j^H,  B = [h_k u_k w_k]_k,
// with mu >= 0 the smallest value giving Tr(V^H V) <= P. A = U diag(lambda) U^H turns the power
// into sum_i ||(U^H B)_i||^2 / (lambda_i + mu)^2, so each mu probe is O(N N_r).
struct PrecoderUpdate {
  ComplexMatrix v;
  double mu;
};

PrecoderUpdate update_precoders(const ComplexMatrix& h, const Eigen::VectorXcd& u,
                                const Eigen::VectorXd& w, const WmmseConfig& cfg) {
  const Eigen::VectorXd d = w.array() * u.array().abs2();
  const ComplexMatrix a = h * d.asDiagonal() * h.adjoint();
  ComplexMatrix b = h;
  for (Eigen::Index k = 0; k < h.cols(); ++k) b.col(k) *= u(k) * w(k);

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(a);
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  const ComplexMatrix phi = eig.eigenvectors().adjoint() * b;
  const Eigen::VectorXd phi_rows = phi.rowwise().squaredNorm();

  auto power_at = [&](double mu) {
    return (phi_rows.array() / (lambda.array() + mu).square()).sum();
  };

  double mu = kMuMin;
  if (power_at(mu) > cfg.power) {
    double lo = kMuMin;
    double hi = 1.0;
    while (power_at(hi) > cfg.power) {
      lo = hi;
      hi *= 2.0;
    }
    mu = hi;
    for (int step = 0; step < cfg.bisection_max_steps; ++step) {
      const double mid = 0.5 * (lo + hi);
      const double p = power_at(mid);
      mu = mid;
      if (std::abs(p - cfg.power) <= cfg.bisection_tol * cfg.power) break;
      if (p > cfg.power)
        lo = mid;
      else
        hi = mid;
    }
  }
  const Eigen::VectorXd inv = (lambda.array() + mu).inverse();
  return {eig.eigenvectors() * inv.asDiagonal() * phi, mu};
}

}  // namespace

WmmseResult wmmse_solve(const ComplexMatrix& h, const WmmseConfig& cfg,
                        const std::optional<ComplexMatrix>& init) {
  cfg.validate();
  if (h.cols() < 1) throw DimensionError("wmmse: need at least one user", 1);
  if (!h.allFinite()) throw NumericalError("wmmse: non-finite channel");

  WmmseResult res;
  if (h.squaredNorm() == 0.0) {
    res.v = ComplexMatrix::Zero(h.rows(), h.cols());
    res.rate_trace = {0.0};
    res.converged = true;
    return res;
  }

  ComplexMatrix v;
  if (init) {
    if (init->rows() != h.rows() || init->cols() != h.cols())
      throw DimensionError("wmmse: initial beamformer shape mismatch");
    v = *init;
  } else if (cfg.init == WmmseInit::kRandom) {
    v = random_init(h, cfg.power, cfg.init_seed);
  } else {
    v = matched_filter_init(h, cfg.power);
  }

  const Eigen::Index users = h.cols();
  double rate = sum_rate(h, v, cfg.noise_var);
  res.rate_trace.push_back(rate);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    const ComplexMatrix g = h.adjoint() * v;  // g(k, j) = h_k^H v_j
    Eigen::VectorXcd u(users);
    Eigen::VectorXd w(users);
    for (Eigen::Index k = 0; k < users; ++k) {
      const double total = cfg.noise_var + g.row(k).squaredNorm();
      const double signal = std::norm(g(k, k));
      u(k) = g(k, k) / total;
      // 1 / (1 - conj(u_k) h_k^H v_k) = total / (total - |h_k^H v_k|^2)
      w(k) = total / (total - signal);
    }
    auto upd = update_precoders(h, u, w, cfg);
    v = std::move(upd.v);
    res.mu = upd.mu;
    ++res.iterations;
    const double next = sum_rate(h, v, cfg.noise_var);
    res.rate_trace.push_back(next);
    const double change = std::abs(next - rate);
    rate = next;
    if (change < cfg.epsilon) {
      res.converged = true;
      break;
    }
  }
  res.v = std::move(v);
  return res;
}

void label_dataset(Dataset& ds, const WmmseConfig& cfg) {
  cfg.validate();
  const long n = static_cast<long>(ds.samples.size());
  const int threads = configured_threads() ? configured_threads() : omp_get_max_threads();
  std::vector<std::string> errors(ds.samples.size());
#pragma omp parallel for num_threads(threads) schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    auto& s = ds.samples[i];
    try {
      s.v_real = wmmse_solve(s.h_real, cfg).v;
      s.v_low = wmmse_solve(s.h_low, cfg).v;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty())
      throw NumericalError("wmmse labeling failed at sample " + std::to_string(i) + ": " +
                           errors[i]);
  ds.labeled = true;
}

}  // namespace beamcast
