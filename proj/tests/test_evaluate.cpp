// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "beamcast/evaluate.hpp"

using namespace beamcast;

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig sc;
  sc.n_high = 16;
  sc.n_low = 4;
  sc.n_users = 2;
  return sc;
}

struct Fixture {
  Dataset ds;
  GenArch arch;
  ParameterSet<double> gen;
  WmmseConfig wcfg;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    const auto sc = small_scenario();
    x.wcfg = WmmseConfig::from_snr_db(sc.snr_db);
    x.ds = generate_dataset(sc, 25, 3);
    label_dataset(x.ds, x.wcfg);
    TrainConfig cfg;
    cfg.width_scale = 1.0 / 16.0;
    x.arch = make_generator_arch(gan_shape_for(sc, cfg));
    x.gen = init_generator<double>(x.arch, 5);
    return x;
  }();
  return f;
}

}  // namespace

TEST(Evaluate, RowCountMatchesSplit) {
  const auto& f = fixture();
  const auto rep = evaluate(f.ds, f.ds.test, f.arch, f.gen, f.wcfg, 9);
  ASSERT_EQ(rep.rows.size(), f.ds.test.size());
  for (std::size_t j = 0; j < rep.rows.size(); ++j) EXPECT_EQ(rep.rows[j].index, f.ds.test[j]);
}

TEST(Evaluate, WmmseBoundsGeneratedAndZeroPadding) {
  const auto& f = fixture();
  const auto rep = evaluate(f.ds, f.ds.test, f.arch, f.gen, f.wcfg, 9);
  EXPECT_GE(rep.se_wmmse.mean, rep.se_generated.mean);
  EXPECT_GE(rep.se_wmmse.mean, rep.se_zero_pad.mean);
  for (const auto& r : rep.rows) {
    EXPECT_GE(r.se_generated, 0.0);
    EXPECT_GE(r.se_zero_pad, 0.0);
    EXPECT_TRUE(std::isfinite(r.nmse_db));
  }
}

TEST(Evaluate, DeterministicAcrossThreadCounts) {
  const auto& f = fixture();
  const int before = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto a = evaluate(f.ds, f.ds.test, f.arch, f.gen, f.wcfg, 9);
  omp_set_num_threads(3);
  const auto b = evaluate(f.ds, f.ds.test, f.arch, f.gen, f.wcfg, 9);
  omp_set_num_threads(before);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t j = 0; j < a.rows.size(); ++j) {
    EXPECT_EQ(a.rows[j].se_generated, b.rows[j].se_generated);
    EXPECT_EQ(a.rows[j].nmse_db, b.rows[j].nmse_db);
  }
  EXPECT_EQ(a.nmse_db, b.nmse_db);
}

TEST(Evaluate, SplitNmseIsMeanOfRatios) {
  const auto& f = fixture();
  const auto rep = evaluate(f.ds, f.ds.test, f.arch, f.gen, f.wcfg, 9);
  double acc = 0;
  for (const auto& r : rep.rows) acc += std::pow(10.0, r.nmse_db / 10.0);
  acc /= static_cast<double>(rep.rows.size());
  EXPECT_NEAR(rep.nmse_db, 10.0 * std::log10(acc), 1e-9);
}

TEST(Evaluate, UnlabeledRejected) {
  const auto& f = fixture();
  const Dataset raw = generate_dataset(small_scenario(), 5, 3);
  EXPECT_THROW(evaluate(raw, raw.test, f.arch, f.gen, f.wcfg, 9), ConfigError);
}

TEST(MeanStd, Example) {
  const Stat s = mean_std({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(1.25));
}

TEST(Median, OddAndEven) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
  EXPECT_THROW(median({}), ConfigError);
}

TEST(LogLogSlope, ExactPowerLaw) {
  const std::vector<double> x{16, 32, 64};
  std::vector<double> y;
  for (double v : x) y.push_back(0.5 * std::pow(v, 2.7));
  EXPECT_NEAR(loglog_slope(x, y), 2.7, 1e-12);
}

TEST(SingleThreadScope, PinsAndRestores) {
  omp_set_num_threads(3);
  {
    SingleThreadScope pin;
    EXPECT_EQ(omp_get_max_threads(), 1);
    EXPECT_EQ(Eigen::nbThreads(), 1);
  }
  EXPECT_EQ(omp_get_max_threads(), 3);
}

TEST(BenchmarkRuntime, RatioFiniteAndComponentsAdd) {
  const auto& f = fixture();
  std::vector<ChannelSample> samples(f.ds.samples.begin(), f.ds.samples.begin() + 4);
  const auto t = benchmark_runtime(samples, f.wcfg, f.arch, f.gen, 7);
  EXPECT_GT(t.ratio(), 0.0);
  EXPECT_TRUE(std::isfinite(t.ratio()));
  EXPECT_EQ(t.n_high, 16u);
  EXPECT_EQ(t.n_low, 4u);
  EXPECT_LT(t.additivity_gap(), 0.2);
}

TEST(BenchmarkRuntime, NeedsFiveReps) {
  const auto& f = fixture();
  EXPECT_THROW(benchmark_runtime(f.ds.samples, f.wcfg, f.arch, f.gen, 4), ConfigError);
}

TEST(WmmseScaling, PointsPerAntennaCount) {
  const auto fit = wmmse_scaling(small_scenario(), {8, 16}, fixture().wcfg, 2, 5, 1);
  ASSERT_EQ(fit.points.size(), 2u);
  EXPECT_EQ(fit.points[0].n_antennas, 8u);
  EXPECT_GT(fit.points[1].seconds, 0.0);
  EXPECT_TRUE(std::isfinite(fit.exponent));
}
