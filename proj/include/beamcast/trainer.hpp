// SPDX-License-Identifier: Apache-2.0
//
// Adversarial training of the conditional generator/critic pair plus the prediction pipeline.
//
// Per batch the trainer draws the generator noise Z and the interpolation weight alpha, forms
// the critic objective L1 = D(real) - D(fake) - lambda * GP and the regression term
// L2 = ||fake - real||^2, ascends L1 in the critic parameters on critic steps and descends
// -D(fake) + beta * L2 in the generator parameters on generator steps.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "beamcast/channel_sim.hpp"
#include "beamcast/gan_models.hpp"
#include "beamcast/metrics.hpp"
#include "beamcast/optimizer.hpp"
#include "beamcast/wmmse.hpp"

namespace beamcast {

enum class Schedule {
  kSparseCritic,  // generator every gen_period batches, critic every disc_period batches
  kStandard,      // periods swapped: critic every batch, generator every 5th
};

enum class Precision { kF32, kF64 };

Schedule parse_schedule(const std::string& s);
Precision parse_precision(const std::string& s);

struct TrainConfig {
  double lr_gen = 2e-4;
  double lr_disc = 2e-5;
  double beta = 100.0;
  double lambda = 10.0;
  std::size_t epochs = 50;
  std::size_t batch_size = 1;
  std::size_t gen_period = 1;
  std::size_t disc_period = 5;
  Schedule schedule = Schedule::kSparseCritic;
  double rms_decay = 0.9;
  double rms_epsilon = 1e-8;
  std::uint64_t seed = 1;
  std::uint64_t eval_seed = 0x5eed;
  Precision precision = Precision::kF32;
  double power = 1.0;
  double width_scale = 1.0;

  void validate() const;
  std::size_t effective_gen_period() const {
    return schedule == Schedule::kSparseCritic ? gen_period : disc_period;
  }
  std::size_t effective_disc_period() const {
    return schedule == Schedule::kSparseCritic ? disc_period : gen_period;
  }
};

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  std::size_t sample = 0;  // first sample index of the batch
  double l1 = 0, l2 = 0, gp = 0, d_real = 0, d_fake = 0;
  bool gen_updated = false;
  bool disc_updated = false;
  double wall_ms = 0;
};

struct TrainTrace {
  std::vector<StepRecord> steps;
  std::vector<double> epoch_test_nmse_db;  // after each epoch
  std::vector<double> epoch_wall_s;

  /// Equality of everything except wall-clock fields.
  bool same_values(const TrainTrace& other) const;
};

/// GAN shape implied by a scenario and a training config.
GanShape gan_shape_for(const ScenarioConfig& sc, const TrainConfig& cfg);

/// Sample tensors used by training and evaluation.
template <typename T>
struct SampleTensors {
  Tensor<T> v_real, v_low, h_low;
};

template <typename T>
SampleTensors<T> sample_tensors(const ChannelSample& s) {
  if (s.v_real.size() == 0 || s.v_low.size() == 0)
    throw ConfigError("sample " + std::to_string(s.index) + " is not labeled");
  return {to_tensor<T>(s.v_real), to_tensor<T>(s.v_low), to_tensor<T>(s.h_low)};
}

template <typename T>
using Critic = std::function<ad::Var<T>(const ad::Var<T>&)>;

/// (||grad_x D(x)|| - 1)^2 at x = alpha * real + (1 - alpha) * fake, recorded so it can be
/// differentiated with respect to the critic parameters.
template <typename T>
ad::Var<T> gradient_penalty(const Critic<T>& critic, const Tensor<T>& v_real,
                            const Tensor<T>& v_fake, T alpha) {
  if (v_real.shape() != v_fake.shape())
    throw DimensionError("gradient_penalty: real/fake shape mismatch");
  Tensor<T> mix(v_real.shape());
  for (std::size_t i = 0; i < mix.size(); ++i)
    mix[i] = alpha * v_real[i] + (T(1) - alpha) * v_fake[i];
  ad::GradModeGuard guard(ad::GradMode::kDifferentiable);
  const auto x = ad::Var<T>::leaf(std::move(mix));
  const auto g = ad::input_gradient(critic(x), x);
  // The tiny offset keeps the norm differentiable at g = 0 without moving it measurably.
  const auto norm = ad::pow(ad::add_const(ad::sum(ad::pow(g, T(2))), T(1e-30)), T(0.5));
  return ad::pow(ad::add_const(norm, T(-1)), T(2));
}

template <typename T>
ad::Var<T> gradient_penalty(const DiscArch& arch, const ParameterSet<T>& disc,
                            const Tensor<T>& v_real, const Tensor<T>& v_fake,
                            const ad::Var<T>& v_low, T alpha) {
  return gradient_penalty<T>(
      [&](const ad::Var<T>& x) { return discriminator_forward(arch, disc, x, v_low); }, v_real,
      v_fake, alpha);
}

template <typename T>
ad::Var<T> critic_loss(const ad::Var<T>& d_real, const ad::Var<T>& d_fake, const ad::Var<T>& gp,
                       T lambda) {
  return ad::sub(ad::sub(d_real, d_fake), ad::scale(gp, lambda));
}

/// Squared Frobenius distance; real and imaginary parts count as separate channels.
template <typename T>
ad::Var<T> l2_loss(const ad::Var<T>& v_gen, const ad::Var<T>& v_real) {
  return ad::sum(ad::pow(ad::sub(v_gen, v_real), T(2)));
}

/// Everything needed to continue training bit-identically.
template <typename T>
struct TrainState {
  GenArch gen_arch;
  DiscArch disc_arch;
  ParameterSet<T> gen;
  ParameterSet<T> disc;
  RmsProp<T> gen_opt;
  RmsProp<T> disc_opt;
  Rng rng;
  std::size_t epoch = 0;  // completed epochs
  std::size_t step = 0;   // completed batches

  std::string rng_state() const {
    std::ostringstream os;
    os << rng;
    return os.str();
  }
  void set_rng_state(const std::string& s) {
    std::istringstream is(s);
    is >> rng;
    if (!is) throw CorruptFileError("unreadable RNG state");
  }
};

template <typename T>
TrainState<T> init_train_state(const GanShape& shape, const TrainConfig& cfg) {
  cfg.validate();
  TrainState<T> st;
  st.gen_arch = make_generator_arch(shape);
  st.disc_arch = make_discriminator_arch(shape);
  st.gen = init_generator<T>(st.gen_arch, derive_seed(cfg.seed, 1));
  st.disc = init_discriminator<T>(st.disc_arch, derive_seed(cfg.seed, 2));
  st.gen_opt = RmsProp<T>(st.gen, {cfg.lr_gen, cfg.rms_decay, cfg.rms_epsilon});
  st.disc_opt = RmsProp<T>(st.disc, {cfg.lr_disc, cfg.rms_decay, cfg.rms_epsilon});
  st.rng.seed(derive_seed(cfg.seed, 3));
  return st;
}

/// Evaluation noise for test sample `index`; fixed across epochs.
template <typename T>
Tensor<T> eval_noise(std::uint64_t eval_seed, std::size_t index, const Shape& shape) {
  Rng rng(derive_seed(eval_seed, index));
  return normal_tensor<T>(shape, rng);
}

/// Generated high-dimensional beamformer for one sample, no gradient recording. The budget is
/// re-imposed in double after conversion so f32 rounding does not leak into Tr(V^H V).
template <typename T>
ComplexMatrix generate(const GenArch& arch, const ParameterSet<T>& gen, const Tensor<T>& z,
                       const Tensor<T>& v_low, const Tensor<T>& h_low, double power) {
  ad::GradModeGuard guard(ad::GradMode::kNoGrad);
  const auto v = generator_forward(arch, gen, ad::Var<T>::constant(z),
                                   ad::Var<T>::constant(v_low), ad::Var<T>::constant(h_low),
                                   power);
  return power_normalize(from_tensor(v.value()), power);
}

/// Mean-of-ratios NMSE (dB) of the generator over `indices` with evaluation noise.
template <typename T>
double test_nmse_db(const TrainState<T>& st, const Dataset& ds,
                    const std::vector<std::size_t>& indices, const TrainConfig& cfg) {
  std::vector<ComplexMatrix> target, est;
  for (std::size_t i : indices) {
    const auto& s = ds.samples[i];
    const auto t = sample_tensors<T>(s);
    target.push_back(s.v_real);
    est.push_back(generate(st.gen_arch, st.gen, eval_noise<T>(cfg.eval_seed, i, t.v_low.shape()),
                           t.v_low, t.h_low, cfg.power));
  }
  return nmse_db(target, est);
}

struct StepResult {
  StepRecord record;
  double gen_nonzero_grad_fraction = 0;  // share of generator scalars with nonzero gradient
};

/// One batch. `batch` holds dataset indices; gradients are averaged over the batch.
template <typename T>
StepResult train_step(TrainState<T>& st, const Dataset& ds, const std::vector<std::size_t>& batch,
                      const TrainConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const bool do_disc = st.step % cfg.effective_disc_period() == 0;
  const bool do_gen = st.step % cfg.effective_gen_period() == 0;
  const T inv_b = T(1) / static_cast<T>(batch.size());
  const T lambda = static_cast<T>(cfg.lambda);
  const T beta = static_cast<T>(cfg.beta);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Item {
    SampleTensors<T> t;
    ad::Var<T> fake;
    T alpha;
  };
  std::vector<Item> items;
  for (std::size_t i : batch) {
    Item it{sample_tensors<T>(ds.samples[i]), {}, T(0)};
    const Tensor<T> z = normal_tensor<T>(it.t.v_low.shape(), st.rng);
    it.alpha = static_cast<T>(unit(st.rng));
    ad::GradModeGuard guard(do_gen ? ad::GradMode::kFirstOrder : ad::GradMode::kNoGrad);
    it.fake = generator_forward(st.gen_arch, st.gen, ad::Var<T>::constant(z),
                                ad::Var<T>::constant(it.t.v_low), ad::Var<T>::constant(it.t.h_low),
                                cfg.power);
    items.push_back(std::move(it));
  }

  StepResult res;
  auto& rec = res.record;
  rec.epoch = st.epoch;
  rec.step = st.step;
  rec.sample = batch.front();
  rec.disc_updated = do_disc;
  rec.gen_updated = do_gen;

  auto check = [&](double v, const char* what) {
    if (!std::isfinite(v))
      throw NumericalError(std::string("non-finite ") + what + " at step " +
                           std::to_string(st.step) + " (sample " + std::to_string(batch.front()) +
                           ", generator fingerprint " + std::to_string(st.gen.value_fingerprint()) +
                           ", critic fingerprint " + std::to_string(st.disc.value_fingerprint()) +
                           ")");
  };

  // Critic objective on detached fakes.
  {
    ad::Var<T> total;
    for (const auto& it : items) {
      const auto v_low = ad::Var<T>::constant(it.t.v_low);
      const auto d_real =
          discriminator_forward(st.disc_arch, st.disc, ad::Var<T>::constant(it.t.v_real), v_low);
      const auto d_fake = discriminator_forward(st.disc_arch, st.disc, it.fake.detach(), v_low);
      const auto gp = gradient_penalty(st.disc_arch, st.disc, it.t.v_real, it.fake.value(),
                                       v_low, it.alpha);
      const auto l1 = critic_loss(d_real, d_fake, gp, lambda);
      rec.d_real += d_real.value()[0] * inv_b;
      rec.d_fake += d_fake.value()[0] * inv_b;
      rec.gp += gp.value()[0] * inv_b;
      rec.l1 += l1.value()[0] * inv_b;
      const auto term = ad::scale(l1, -inv_b);
      total = total.defined() ? ad::add(total, term) : term;
    }
    check(rec.l1, "critic loss");
    if (do_disc) {
      const auto vars = st.disc.vars();
      st.disc_opt.step(st.disc, ad::gradients<T>(total, vars));
    }
  }

  // Generator objective: -D(fake) + beta * L2.
  {
    ad::Var<T> total;
    for (const auto& it : items) {
      const auto l2 = l2_loss(it.fake, ad::Var<T>::constant(it.t.v_real));
      rec.l2 += l2.value()[0] * inv_b;
      if (!do_gen) continue;
      const auto d_fake =
          discriminator_forward(st.disc_arch, st.disc, it.fake, ad::Var<T>::constant(it.t.v_low));
      const auto term = ad::scale(ad::sub(ad::scale(l2, beta), d_fake), inv_b);
      total = total.defined() ? ad::add(total, term) : term;
    }
    check(rec.l2, "regression loss");
    if (do_gen) {
      const auto vars = st.gen.vars();
      const auto grads = ad::gradients<T>(total, vars);
      std::size_t nonzero = 0;
      for (const auto& v : grads)
        for (T x : v.value().data()) nonzero += x != T(0);
      res.gen_nonzero_grad_fraction =
          static_cast<double>(nonzero) / static_cast<double>(st.gen.scalar_count());
      st.gen_opt.step(st.gen, grads);
    }
  }

  ++st.step;
  rec.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

using EpochCallback = std::function<void(std::size_t epoch, double test_nmse_db)>;

/// Runs `epochs` more epochs starting from the state's epoch counter; appends to `trace`.
template <typename T>
void train(TrainState<T>& st, const Dataset& ds, const TrainConfig& cfg, std::size_t epochs,
           TrainTrace& trace, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  if (!ds.labeled) throw ConfigError("training needs a labeled dataset");
  if (ds.train.empty()) throw ConfigError("training split is empty");
  for (std::size_t e = 0; e < epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order = ds.train;
    std::shuffle(order.begin(), order.end(), st.rng);
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), b + cfg.batch_size);
      std::vector<std::size_t> batch(order.begin() + b, order.begin() + end);
      trace.steps.push_back(train_step(st, ds, batch, cfg).record);
    }
    ++st.epoch;
    const double nmse = ds.test.empty() ? 0.0 : test_nmse_db(st, ds, ds.test, cfg);
    trace.epoch_test_nmse_db.push_back(nmse);
    trace.epoch_wall_s.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (on_epoch) on_epoch(st.epoch, nmse);
  }
}

/// Prediction stage: low-dimensional WMMSE on H_low, then the generator. Never touches the
/// high-dimensional channel.
template <typename T>
ComplexMatrix predict(const GenArch& arch, const ParameterSet<T>& gen, const ComplexMatrix& h_low,
                      const WmmseConfig& wcfg, Rng& rng) {
  const ComplexMatrix v_low = wmmse_solve(h_low, wcfg).v;
  const Tensor<T> vl = to_tensor<T>(v_low);
  const Tensor<T> z = normal_tensor<T>(vl.shape(), rng);
  return generate(arch, gen, z, vl, to_tensor<T>(h_low), wcfg.power);
}

}  // namespace beamcast
