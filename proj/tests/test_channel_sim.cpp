// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "beamcast/channel_sim.hpp"

using namespace beamcast;

namespace {
ArrayGeometry ula(std::size_t n, double spacing) {
  ArrayGeometry g;
  g.n_antennas = n;
  g.spacing_wavelengths = spacing;
  return g;
}
}  // namespace

TEST(ArrayResponse, BroadsideIsAllOnes) {
  for (double spacing : {0.1, 0.5, 1.3}) {
    auto a = array_response(ula(16, spacing), 0.0, 0.7);
    for (Eigen::Index m = 0; m < a.size(); ++m) EXPECT_NEAR(std::abs(a(m) - cdouble(1, 0)), 0.0, 1e-15);
  }
}

TEST(ArrayResponse, HalfWavelengthEndfire) {
  auto a = array_response(ula(2, 0.5), std::numbers::pi / 2, 0.0);
  EXPECT_NEAR(std::abs(a(0) - cdouble(1, 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(a(1) - cdouble(-1, 0)), 0.0, 1e-15);
}

TEST(ArrayResponse, UnitModulusAndNorm) {
  Rng rng(3);
  std::uniform_real_distribution<double> az(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> el(-std::numbers::pi / 2, std::numbers::pi / 2);
  ArrayGeometry planar{12, 0.5, ArrayLayout::kPlanar, 3, 4};
  for (int i = 0; i < 100; ++i) {
    for (const auto& g : {ula(32, 0.1), ula(7, 0.5), planar}) {
      auto a = array_response(g, az(rng), el(rng));
      for (Eigen::Index m = 0; m < a.size(); ++m) EXPECT_NEAR(std::abs(a(m)), 1.0, 1e-14);
      EXPECT_NEAR(a.squaredNorm(), double(g.n_antennas), 1e-11);
    }
  }
}

TEST(ArrayGeometry, Validation) {
  EXPECT_THROW(array_response(ula(0, 0.5), 0, 0), ConfigError);
  EXPECT_THROW(array_response(ula(4, 0.0), 0, 0), ConfigError);
  ArrayGeometry bad{12, 0.5, ArrayLayout::kPlanar, 5, 2};
  EXPECT_THROW(array_response(bad, 0, 0), ConfigError);
}

TEST(SynthPaths, CountAndDeterminism) {
  ScenarioConfig cfg;
  cfg.n_paths = 5;
  Rng a(42), b(42);
  auto p1 = synth_paths(cfg, a);
  auto p2 = synth_paths(cfg, b);
  ASSERT_EQ(p1.paths.size(), 5u);
  for (std::size_t l = 0; l < 5; ++l) {
    EXPECT_EQ(p1.paths[l].gain, p2.paths[l].gain);
    EXPECT_EQ(p1.paths[l].azimuth, p2.paths[l].azimuth);
    EXPECT_GE(p1.paths[l].azimuth, -std::numbers::pi);
    EXPECT_LE(p1.paths[l].azimuth, std::numbers::pi);
    EXPECT_GE(p1.paths[l].elevation, -std::numbers::pi / 2);
    EXPECT_LE(p1.paths[l].elevation, std::numbers::pi / 2);
  }
  EXPECT_GT(p1.path_loss, 0.0);
}

TEST(SynthPaths, GainMoments) {
  ScenarioConfig cfg;
  cfg.n_paths = 2;
  Rng rng(5);
  double nlos = 0, los = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto p = synth_paths(cfg, rng);
    los += std::norm(p.paths[0].gain);
    nlos += std::norm(p.paths[1].gain);
  }
  EXPECT_NEAR(nlos / n, 1.0, 0.05);
  EXPECT_NEAR(los / n / (cfg.los_gain * cfg.los_gain), 1.0, 0.05);
}

TEST(AssembleChannel, SinglePathUnitGain) {
  auto g = ula(16, 0.5);
  PathSet ps;
  ps.paths = {{cdouble(1, 0), 0.4, 0.1}};
  ps.path_loss = 16.0;
  auto h = assemble_channel(ps, g);
  auto a = array_response(g, 0.4, 0.1);
  EXPECT_NEAR((h - a).norm(), 0.0, 1e-13);
  EXPECT_NEAR(h.squaredNorm(), 16.0, 1e-12);
}

TEST(AssembleChannel, CancellingPaths) {
  PathSet ps;
  ps.paths = {{cdouble(0.3, -1.2), 0.4, 0.1}, {cdouble(-0.3, 1.2), 0.4, 0.1}};
  ps.path_loss = 3.0;
  EXPECT_NEAR(assemble_channel(ps, ula(8, 0.5)).norm(), 0.0, 1e-15);
}

TEST(AssembleChannel, MatchesLoopOracle) {
  ScenarioConfig cfg;
  Rng rng(8);
  auto ps = synth_paths(cfg, rng);
  auto g = ula(32, 0.1);
  auto h = assemble_channel(ps, g);
  const double scale = std::sqrt(32.0 / ps.path_loss);
  for (std::size_t m = 0; m < 32; ++m) {
    cdouble acc = 0;
    for (const auto& p : ps.paths) {
      const double phase = 2 * std::numbers::pi * 0.1 * double(m) * std::sin(p.azimuth) *
                           std::cos(p.elevation);
      acc += p.gain * cdouble(std::cos(phase), std::sin(phase));
    }
    EXPECT_NEAR(std::abs(h(m) - scale * acc), 0.0, 1e-12 * std::max(1.0, std::abs(h(m))));
  }
}

TEST(AssembleChannel, LinearInGains) {
  auto g = ula(8, 0.5);
  PathSet a, b, merged;
  a.paths = {{cdouble(0.5, 0.1), 0.3, 0.2}};
  b.paths = {{cdouble(-0.2, 0.7), 0.3, 0.2}};
  merged.paths = {{a.paths[0].gain + b.paths[0].gain, 0.3, 0.2}};
  a.path_loss = b.path_loss = merged.path_loss = 5.0;
  EXPECT_NEAR((assemble_channel(merged, g) - assemble_channel(a, g) - assemble_channel(b, g)).norm(),
              0.0, 1e-14);
}

TEST(NormalizeChannel, Examples) {
  ComplexMatrix h(1, 1);
  h << cdouble(2, 0);
  EXPECT_EQ(normalize_channel(h)(0, 0), cdouble(1, 0));
  ComplexMatrix h2(1, 2);
  h2 << cdouble(1, 0), cdouble(0, -3);
  auto n = normalize_channel(h2);
  EXPECT_NEAR(std::abs(n(0, 0) - cdouble(1.0 / 3, 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(n(0, 1) - cdouble(0, -1)), 0.0, 1e-15);
  EXPECT_THROW(normalize_channel(ComplexMatrix::Zero(2, 2)), NumericalError);
}

TEST(NormalizeChannel, PreservesPhaseAndPeaksAtOne) {
  Rng rng(9);
  for (int t = 0; t < 1000; ++t) {
    ComplexMatrix h(4, 3);
    for (Eigen::Index i = 0; i < h.size(); ++i) h(i) = complex_normal(rng);
    auto n = normalize_channel(h);
    EXPECT_NEAR(n.cwiseAbs().maxCoeff(), 1.0, 1e-15);
    for (Eigen::Index i = 0; i < h.size(); ++i)
      EXPECT_NEAR(std::remainder(std::arg(n(i)) - std::arg(h(i)), 2 * std::numbers::pi), 0.0, 1e-12);
  }
}

TEST(InjectCee, PerfectIsIdentity) {
  Rng rng(1);
  ComplexMatrix h = ComplexMatrix::Random(8, 4);
  EXPECT_EQ(inject_cee(h, kPerfectEstimate, rng), h);
}

TEST(InjectCee, RealizedRatio) {
  for (auto [db, target] : {std::pair{-20.0, 0.01}, std::pair{0.0, 1.0}}) {
    Rng rng(17);
    double err = 0, energy = 0;
    for (int i = 0; i < 1000; ++i) {
      ComplexMatrix h(32, 4);
      for (Eigen::Index k = 0; k < h.size(); ++k) h(k) = complex_normal(rng);
      auto est = inject_cee(h, db, rng);
      err += (est - h).squaredNorm();
      energy += h.squaredNorm();
    }
    EXPECT_NEAR(err / energy / target, 1.0, 0.1);
  }
}

TEST(Subsample, StridedRows) {
  auto rows = subset_rows(32, 8);
  std::vector<std::size_t> want{0, 4, 8, 12, 16, 20, 24, 28};
  EXPECT_EQ(rows, want);
  ComplexMatrix h = ComplexMatrix::Random(32, 4);
  auto low = subsample_channel(h, 8);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(low.row(i), h.row(rows[i]));
  EXPECT_EQ(subsample_channel(h, 32), h);
  EXPECT_THROW(subsample_channel(h, 7), DimensionError);
  auto contiguous = subset_rows(32, 8, SubsetMode::kContiguous);
  EXPECT_EQ(contiguous.back(), 7u);
}

TEST(GenerateDataset, SplitAndDeterminism) {
  ScenarioConfig cfg;
  auto a = generate_dataset(cfg, 250, 7);
  EXPECT_EQ(a.train.size(), 200u);
  EXPECT_EQ(a.test.size(), 50u);
  std::set<std::size_t> all(a.train.begin(), a.train.end());
  for (auto i : a.test) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 250u);
  auto b = generate_dataset(cfg, 250, 7);
  EXPECT_EQ(a.train, b.train);
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].h_real, b.samples[i].h_real);
    EXPECT_EQ(a.samples[i].h_low, subsample_channel(a.samples[i].h_real, cfg.n_low));
  }
}

TEST(GenerateDataset, SerialAndParallelAgree) {
  ScenarioConfig cfg;
  auto ds = generate_dataset(cfg, 6, 3);
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    auto s = generate_sample(cfg, derive_seed(3, i), i);
    EXPECT_EQ(s.h_real, ds.samples[i].h_real);
  }
}

TEST(GenerateDataset, RejectsBadConfig) {
  ScenarioConfig cfg;
  cfg.n_low = 7;
  EXPECT_THROW(generate_dataset(cfg, 10, 1), ConfigError);
  ScenarioConfig ok;
  EXPECT_THROW(generate_dataset(ok, 1, 1), ConfigError);
}

// Holographic spacing correlates neighbouring steering vectors more strongly.
TEST(Properties, SpatialCorrelationGrowsAsSpacingShrinks) {
  auto mean_corr = [](double spacing) {
    Rng rng(2024);
    std::uniform_real_distribution<double> az(-std::numbers::pi / 2, std::numbers::pi / 2);
    const double delta = 2.0 * std::numbers::pi / 180.0;
    auto g = ula(32, spacing);
    double acc = 0;
    for (int i = 0; i < 1000; ++i) {
      const double t = az(rng);
      acc += std::abs(array_response(g, t, 0).dot(array_response(g, t + delta, 0))) / 32.0;
    }
    return acc / 1000.0;
  };
  EXPECT_GT(mean_corr(0.1), mean_corr(0.5));
}
