// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "beamcast/metrics.hpp"
#include "beamcast/wmmse.hpp"

using namespace beamcast;

namespace {

ComplexMatrix random_channel(Eigen::Index nt, Eigen::Index nr, Rng& rng) {
  ComplexMatrix h(nt, nr);
  for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = complex_normal(rng);
  return h;
}

// Water-filling over parallel channels with gains g_k: p_k = max(nu - 1/g_k, 0), sum p_k = P.
std::vector<double> water_filled_rates(const std::vector<double>& gains, double power) {
  double lo = 0, hi = power + 1e6;
  for (int i = 0; i < 500; ++i) {
    const double nu = 0.5 * (lo + hi);
    double used = 0;
    for (double g : gains) used += std::max(nu - 1.0 / g, 0.0);
    (used > power ? hi : lo) = nu;
  }
  std::vector<double> rates;
  for (double g : gains) rates.push_back(std::log2(1.0 + std::max(lo - 1.0 / g, 0.0) * g));
  return rates;
}

}  // namespace

TEST(Wmmse, SingleUserMatchesMatchedFilterOptimum) {
  Rng rng(1);
  const auto cfg = WmmseConfig::from_snr_db(10.0);
  for (int t = 0; t < 20; ++t) {
    auto h = random_channel(8, 1, rng);
    auto res = wmmse_solve(h, cfg);
    const double want = std::log2(1.0 + cfg.power * h.squaredNorm() / cfg.noise_var);
    EXPECT_NEAR(res.rate_trace.back() / want, 1.0, 1e-6);
    const double cosine = std::abs(h.col(0).dot(res.v.col(0))) / (h.norm() * res.v.norm());
    EXPECT_GT(cosine, 1.0 - 1e-6);
  }
}

TEST(Wmmse, OrthogonalUsersWaterFill) {
  // Columns of a DFT matrix are orthogonal; give them distinct norms.
  const Eigen::Index nt = 8, nr = 3;
  ComplexMatrix h(nt, nr);
  const double norms[] = {1.0, 0.6, 0.3};
  for (Eigen::Index k = 0; k < nr; ++k)
    for (Eigen::Index m = 0; m < nt; ++m)
      h(m, k) = std::polar(norms[k] / std::sqrt(double(nt)), 2 * M_PI * double(m * k) / double(nt));
  auto cfg = WmmseConfig::from_snr_db(30.0);
  cfg.epsilon = 1e-13;
  cfg.max_iterations = 20000;
  auto res = wmmse_solve(h, cfg);
  std::vector<double> gains;
  for (Eigen::Index k = 0; k < nr; ++k) gains.push_back(h.col(k).squaredNorm() / cfg.noise_var);
  auto want = water_filled_rates(gains, cfg.power);
  auto got = spectral_efficiency(h, res.v, cfg.noise_var).per_user;
  for (Eigen::Index k = 0; k < nr; ++k) EXPECT_NEAR(got[k], want[k], 1e-3) << "user " << k;
}

TEST(Wmmse, ZeroChannel) {
  auto res = wmmse_solve(ComplexMatrix::Zero(8, 4), WmmseConfig::from_snr_db(10));
  EXPECT_EQ(res.rate_trace.size(), 1u);
  EXPECT_EQ(res.rate_trace[0], 0.0);
  EXPECT_EQ(res.v.norm(), 0.0);
}

TEST(Wmmse, RejectsNonFiniteChannel) {
  ComplexMatrix h = ComplexMatrix::Ones(4, 2);
  h(1, 1) = cdouble(std::nan(""), 0);
  EXPECT_THROW(wmmse_solve(h, WmmseConfig::from_snr_db(10)), NumericalError);
}

TEST(Wmmse, MonotoneAscentAndBisectionAccuracy) {
  Rng rng(7);
  const auto cfg = WmmseConfig::from_snr_db(10.0);
  for (int t = 0; t < 50; ++t) {
    auto res = wmmse_solve(random_channel(8, 4, rng), cfg);
    for (std::size_t i = 1; i < res.rate_trace.size(); ++i)
      EXPECT_GE(res.rate_trace[i], res.rate_trace[i - 1] - 1e-9);
    if (res.mu > kMuMin) {
      EXPECT_LT(std::abs(total_power(res.v) - cfg.power) / cfg.power, 1e-8);
    }
    EXPECT_LE(total_power(res.v), cfg.power * (1 + 1e-9));
  }
}

TEST(Wmmse, RandomInitAlsoAscends) {
  Rng rng(8);
  auto cfg = WmmseConfig::from_snr_db(10.0);
  cfg.init = WmmseInit::kRandom;
  cfg.init_seed = 99;
  auto res = wmmse_solve(random_channel(8, 4, rng), cfg);
  for (std::size_t i = 1; i < res.rate_trace.size(); ++i)
    EXPECT_GE(res.rate_trace[i], res.rate_trace[i - 1] - 1e-9);
}

TEST(Wmmse, ScaleConsistency) {
  Rng rng(9);
  auto h = random_channel(8, 4, rng);
  auto cfg = WmmseConfig::from_snr_db(10.0);
  auto scaled = cfg;
  const double c = 3.7;
  scaled.noise_var *= c * c;
  const double r1 = wmmse_solve(h, cfg).rate_trace.back();
  const double r2 = wmmse_solve(h * c, scaled).rate_trace.back();
  EXPECT_NEAR(r1, r2, 1e-6);
}

TEST(Wmmse, Deterministic) {
  Rng rng(10);
  auto h = random_channel(16, 4, rng);
  auto cfg = WmmseConfig::from_snr_db(10.0);
  EXPECT_EQ(wmmse_solve(h, cfg).v, wmmse_solve(h, cfg).v);
}

TEST(LabelDataset, FullPowerAndIdempotent) {
  ScenarioConfig sc;
  auto ds = generate_dataset(sc, 3, 5);
  const auto cfg = WmmseConfig::from_snr_db(sc.snr_db);
  label_dataset(ds, cfg);
  ASSERT_TRUE(ds.labeled);
  for (const auto& s : ds.samples) {
    EXPECT_EQ(s.v_real.rows(), 32);
    EXPECT_EQ(s.v_low.rows(), 8);
    EXPECT_NEAR(total_power(s.v_real) / cfg.power, 1.0, 1e-9);
    EXPECT_NEAR(total_power(s.v_low) / cfg.power, 1.0, 1e-9);
  }
  auto again = ds;
  label_dataset(again, cfg);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    EXPECT_EQ(again.samples[i].v_real, ds.samples[i].v_real);
    EXPECT_EQ(again.samples[i].v_low, ds.samples[i].v_low);
  }
}
