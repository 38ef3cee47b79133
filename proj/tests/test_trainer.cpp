// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "beamcast/trainer.hpp"
#include "gradcheck.hpp"

using namespace beamcast;
using beamcast::testing::grad_check;
using beamcast::testing::random_tensor;
using VarD = ad::Var<double>;

namespace {

ScenarioConfig tiny_scenario() {
  ScenarioConfig sc;
  sc.n_high = 8;
  sc.n_low = 2;
  sc.n_users = 2;
  sc.spacing_wavelengths = 0.1;
  return sc;
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.width_scale = 1.0 / 16.0;
  cfg.precision = Precision::kF64;
  return cfg;
}

const Dataset& tiny_dataset() {
  static const Dataset ds = [] {
    const auto sc = tiny_scenario();
    auto d = generate_dataset(sc, 10, 21);
    label_dataset(d, WmmseConfig::from_snr_db(sc.snr_db));
    return d;
  }();
  return ds;
}

TrainState<double> tiny_state(const TrainConfig& cfg) {
  return init_train_state<double>(gan_shape_for(tiny_scenario(), cfg), cfg);
}

}  // namespace

TEST(GradientPenalty, AlphaOneUsesRealSample) {
  Rng rng(1);
  const auto real = random_tensor({4, 2, 2}, rng);
  const auto fake1 = random_tensor({4, 2, 2}, rng);
  const auto fake2 = random_tensor({4, 2, 2}, rng);
  const Critic<double> critic = [](const VarD& x) { return ad::sum(ad::pow(x, 3.0)); };
  const double a = gradient_penalty(critic, real, fake1, 1.0).value()[0];
  const double b = gradient_penalty(critic, real, fake2, 1.0).value()[0];
  EXPECT_EQ(a, b);
  // Gradient of sum(x^3) is 3x^2 evaluated at the real sample.
  double n2 = 0;
  for (double x : real.data()) n2 += 9 * x * x * x * x;
  EXPECT_NEAR(a, (std::sqrt(n2) - 1) * (std::sqrt(n2) - 1), 1e-9 * a);
}

TEST(GradientPenalty, LinearCriticClosedForm) {
  Rng rng(2);
  const auto real = random_tensor({8, 4, 2}, rng);
  const auto fake = random_tensor({8, 4, 2}, rng);
  const Critic<double> critic = [](const VarD& x) { return ad::sum(x); };
  const double want = (std::sqrt(64.0) - 1) * (std::sqrt(64.0) - 1);
  for (double alpha : {0.0, 0.3, 0.9})
    EXPECT_NEAR(gradient_penalty(critic, real, fake, alpha).value()[0], want, 1e-12);
}

TEST(GradientPenalty, ParameterGradientMatchesFiniteDifferences) {
  Rng rng(3);
  auto k1 = VarD::leaf(random_tensor({3, 3, 2, 3}, rng, 0.5));
  auto b1 = VarD::leaf(random_tensor({3}, rng, 0.1));
  auto k2 = VarD::leaf(random_tensor({3, 3, 3, 1}, rng, 0.5));
  auto b2 = VarD::leaf(random_tensor({1}, rng, 0.1));
  const auto real = random_tensor({4, 3, 2}, rng);
  const auto fake = random_tensor({4, 3, 2}, rng);
  auto f = [&](const std::vector<VarD>& p) {
    const Critic<double> critic = [&](const VarD& x) {
      auto h = ad::leaky_relu(ad::conv2d(x, p[0], p[1], 1, 1, Padding::kSame));
      return ad::sum(ad::conv2d(h, p[2], p[3], 1, 1, Padding::kSame));
    };
    return gradient_penalty(critic, real, fake, 0.37);
  };
  EXPECT_LT(grad_check(f, {k1, b1, k2, b2}).max_rel_error, 1e-5);
}

TEST(CriticLoss, Examples) {
  auto cfg = tiny_config();
  auto st = tiny_state(cfg);
  Rng rng(4);
  const auto real = random_tensor({8, 2, 2}, rng);
  const auto fake = random_tensor({8, 2, 2}, rng);
  const auto v_low = VarD::constant(random_tensor({2, 2, 2}, rng));
  auto d = [&](const Tensor<double>& v) {
    return discriminator_forward(st.disc_arch, st.disc, VarD::constant(v), v_low);
  };
  const auto gp = gradient_penalty(st.disc_arch, st.disc, real, fake, v_low, 0.5);
  EXPECT_EQ(critic_loss(d(real), d(real), gp, 0.0).value()[0], 0.0);
  const double l_a = critic_loss(d(real), d(fake), gp, 10.0).value()[0];
  const double l_b = critic_loss(d(real), d(fake), gp, 12.5).value()[0];
  EXPECT_NEAR(l_b - l_a, -2.5 * gp.value()[0], 1e-9 * std::max(1.0, std::abs(l_a)));

  for (std::size_t i = 0; i < st.disc.size(); ++i)
    if (st.disc.name(i).ends_with("/kernel") || st.disc.name(i).ends_with("/bias"))
      for (auto& x : st.disc.var(i).mutable_value().data()) x = 0;
  EXPECT_EQ(critic_loss(d(real), d(fake), gp, 0.0).value()[0], 0.0);
}

TEST(L2Loss, ExamplesAndLoopOracle) {
  Rng rng(5);
  const auto a = random_tensor({8, 4, 2}, rng);
  auto b = a;
  EXPECT_EQ(l2_loss(VarD::constant(a), VarD::constant(b)).value()[0], 0.0);
  for (auto& x : b.data()) x += 1.0;
  EXPECT_NEAR(l2_loss(VarD::constant(b), VarD::constant(a)).value()[0], 64.0, 1e-12);
  const auto c = random_tensor({8, 4, 2}, rng);
  double want = 0;
  for (std::size_t r = 0; r < 8; ++r)
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t p = 0; p < 2; ++p) {
        const double e = a.at(r, k, p) - c.at(r, k, p);
        want += e * e;
      }
  EXPECT_NEAR(l2_loss(VarD::constant(a), VarD::constant(c)).value()[0], want, 1e-12);
}

TEST(Train, ZeroEpochsChangesNothing) {
  auto cfg = tiny_config();
  auto st = tiny_state(cfg);
  const auto g = st.gen.value_fingerprint();
  const auto d = st.disc.value_fingerprint();
  TrainTrace trace;
  train(st, tiny_dataset(), cfg, 0, trace);
  EXPECT_TRUE(trace.steps.empty());
  EXPECT_TRUE(trace.epoch_test_nmse_db.empty());
  EXPECT_EQ(st.gen.value_fingerprint(), g);
  EXPECT_EQ(st.disc.value_fingerprint(), d);
}

TEST(Train, ScheduleAndDeterminism) {
  auto cfg = tiny_config();
  auto run = [&] {
    auto st = tiny_state(cfg);
    TrainTrace trace;
    train(st, tiny_dataset(), cfg, 2, trace);
    return trace;
  };
  const auto a = run();
  const auto b = run();
  EXPECT_TRUE(a.same_values(b));
  ASSERT_EQ(a.steps.size(), 2 * tiny_dataset().train.size());
  ASSERT_EQ(a.epoch_test_nmse_db.size(), 2u);
  for (const auto& r : a.steps) {
    EXPECT_TRUE(r.gen_updated);
    EXPECT_EQ(r.disc_updated, r.step % 5 == 0);
    for (double v : {r.l1, r.l2, r.gp, r.d_real, r.d_fake}) EXPECT_TRUE(std::isfinite(v));
  }
  cfg.schedule = Schedule::kStandard;
  auto st = tiny_state(cfg);
  TrainTrace s;
  train(st, tiny_dataset(), cfg, 1, s);
  for (const auto& r : s.steps) {
    EXPECT_TRUE(r.disc_updated);
    EXPECT_EQ(r.gen_updated, r.step % 5 == 0);
  }
}

TEST(Train, FrozenNetworkIsUntouched) {
  auto cfg = tiny_config();
  cfg.gen_period = 2;
  cfg.disc_period = 1;
  auto st = tiny_state(cfg);
  const std::vector<std::size_t> batch{tiny_dataset().train.front()};
  train_step(st, tiny_dataset(), batch, cfg);  // step 0: both update
  const auto g = st.gen.value_fingerprint();
  const auto d = st.disc.value_fingerprint();
  auto r = train_step(st, tiny_dataset(), batch, cfg);  // step 1: critic only
  EXPECT_FALSE(r.record.gen_updated);
  EXPECT_EQ(st.gen.value_fingerprint(), g);
  EXPECT_NE(st.disc.value_fingerprint(), d);

  cfg = tiny_config();  // generator every step, critic every 5th
  auto st2 = tiny_state(cfg);
  train_step(st2, tiny_dataset(), batch, cfg);
  const auto g2 = st2.gen.value_fingerprint();
  const auto d2 = st2.disc.value_fingerprint();
  train_step(st2, tiny_dataset(), batch, cfg);
  EXPECT_EQ(st2.disc.value_fingerprint(), d2);
  EXPECT_NE(st2.gen.value_fingerprint(), g2);
}

TEST(Train, GeneratorGradientReachesAlmostEveryParameter) {
  auto cfg = tiny_config();
  cfg.width_scale = 0.25;
  auto st = tiny_state(cfg);
  auto r = train_step(st, tiny_dataset(), {tiny_dataset().train.front()}, cfg);
  ASSERT_GT(r.record.l2, 0.0);
  EXPECT_GE(r.gen_nonzero_grad_fraction, 0.99);
}

TEST(Train, NonFiniteParametersAbort) {
  auto cfg = tiny_config();
  auto st = tiny_state(cfg);
  st.gen["gen/out/bias"].mutable_value()[0] = std::nan("");
  EXPECT_THROW(train_step(st, tiny_dataset(), {tiny_dataset().train.front()}, cfg),
               NumericalError);
}

TEST(Train, ResumeMatchesUninterruptedRun) {
  auto cfg = tiny_config();
  auto full = tiny_state(cfg);
  TrainTrace straight;
  train(full, tiny_dataset(), cfg, 2, straight);

  auto part = tiny_state(cfg);
  TrainTrace resumed;
  train(part, tiny_dataset(), cfg, 1, resumed);
  // A fresh state restored from the first run's snapshot continues identically.
  auto restored = tiny_state(cfg);
  for (std::size_t i = 0; i < part.gen.size(); ++i)
    restored.gen.var(i).mutable_value() = part.gen.var(i).value();
  for (std::size_t i = 0; i < part.disc.size(); ++i)
    restored.disc.var(i).mutable_value() = part.disc.var(i).value();
  restored.gen_opt.accumulators() = part.gen_opt.accumulators();
  restored.disc_opt.accumulators() = part.disc_opt.accumulators();
  restored.set_rng_state(part.rng_state());
  restored.epoch = part.epoch;
  restored.step = part.step;
  train(restored, tiny_dataset(), cfg, 1, resumed);
  EXPECT_TRUE(straight.same_values(resumed));
  EXPECT_EQ(full.gen.value_fingerprint(), restored.gen.value_fingerprint());
}

TEST(Predict, ShapePowerAndDeterminism) {
  auto cfg = tiny_config();
  auto st = tiny_state(cfg);
  const auto& s = tiny_dataset().samples.front();
  const auto wcfg = WmmseConfig::from_snr_db(10.0);
  Rng a(9), b(9);
  const auto v1 = predict(st.gen_arch, st.gen, s.h_low, wcfg, a);
  const auto v2 = predict(st.gen_arch, st.gen, s.h_low, wcfg, b);
  EXPECT_EQ(v1.rows(), 8);
  EXPECT_EQ(v1.cols(), 2);
  EXPECT_NEAR(total_power(v1) / wcfg.power, 1.0, 1e-6);
  EXPECT_EQ(v1, v2);
}

TEST(Train, RejectsUnlabeledData) {
  auto cfg = tiny_config();
  auto st = tiny_state(cfg);
  auto ds = generate_dataset(tiny_scenario(), 5, 1);
  TrainTrace t;
  EXPECT_THROW(train(st, ds, cfg, 1, t), ConfigError);
}
