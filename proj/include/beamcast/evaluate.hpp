// SPDX-License-Identifier: Apache-2.0
//
// Test-set evaluation (sum rates, NMSE, zero-padding baseline) and the single-threaded runtime
// comparison between full-array WMMSE and the low-dimensional WMMSE + generator pipeline.
#pragma once

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <vector>

#include <Eigen/Core>

#include "beamcast/metrics.hpp"
#include "beamcast/trainer.hpp"
#include "beamcast/wmmse.hpp"

namespace beamcast {

struct EvalRow {
  std::size_t index = 0;
  double se_wmmse = 0;     // full-array WMMSE label
  double se_generated = 0;
  double se_zero_pad = 0;
  double nmse_db = 0;      // generated vs label, this sample
};

struct Stat {
  double mean = 0;
  double std = 0;  // population standard deviation
};

Stat mean_std(const std::vector<double>& v);

struct EvalReport {
  std::vector<EvalRow> rows;
  Stat se_wmmse, se_generated, se_zero_pad;
  double nmse_db = 0;  // over the whole split (mean of per-sample ratios)

  void summarize(const std::vector<ComplexMatrix>& targets, const std::vector<ComplexMatrix>& ests);
};

/// Evaluates the generator on `indices` of a labeled dataset. Noise for sample i comes from
/// eval_noise(eval_seed, i), so the result is deterministic and thread-count independent.
template <typename T>
EvalReport evaluate(const Dataset& ds, const std::vector<std::size_t>& indices,
                    const GenArch& arch, const ParameterSet<T>& gen, const WmmseConfig& wcfg,
                    std::uint64_t eval_seed) {
  if (!ds.labeled) throw ConfigError("evaluation needs a labeled dataset");
  const auto rows = subset_rows(ds.config.n_high, ds.config.n_low, ds.config.subset);
  EvalReport rep;
  rep.rows.resize(indices.size());
  std::vector<ComplexMatrix> targets(indices.size()), ests(indices.size());
  const long n = static_cast<long>(indices.size());
#pragma omp parallel for schedule(dynamic)
  for (long j = 0; j < n; ++j) {
    const std::size_t i = indices[static_cast<std::size_t>(j)];
    const auto& s = ds.samples[i];
    const auto t = sample_tensors<T>(s);
    const ComplexMatrix v =
        generate(arch, gen, eval_noise<T>(eval_seed, i, t.v_low.shape()), t.v_low, t.h_low,
                 wcfg.power);
    auto& r = rep.rows[static_cast<std::size_t>(j)];
    r.index = i;
    r.se_wmmse = sum_rate(s.h_real, s.v_real, wcfg.noise_var);
    r.se_generated = sum_rate(s.h_real, v, wcfg.noise_var);
    r.se_zero_pad = sum_rate(
        s.h_real, zero_padding_baseline(s.v_low, rows, ds.config.n_high, wcfg.power),
        wcfg.noise_var);
    r.nmse_db = nmse_db(s.v_real, v);
    targets[static_cast<std::size_t>(j)] = s.v_real;
    ests[static_cast<std::size_t>(j)] = v;
  }
  rep.summarize(targets, ests);
  return rep;
}

struct RuntimeTable {
  std::size_t n_high = 0, n_low = 0, n_users = 0, samples = 0, reps = 0;
  // Median seconds per sample.
  double full_wmmse = 0;
  double low_wmmse = 0;
  double forward = 0;
  double pipeline = 0;  // low_wmmse + forward measured together
  double ratio() const { return pipeline / full_wmmse; }
  /// |pipeline - (low_wmmse + forward)| / pipeline.
  double additivity_gap() const { return std::abs(pipeline - (low_wmmse + forward)) / pipeline; }
};

/// Pins OpenMP and Eigen to one thread for its lifetime.
class SingleThreadScope {
 public:
  SingleThreadScope() : omp_(omp_get_max_threads()), eigen_(Eigen::nbThreads()) {
    omp_set_num_threads(1);
    Eigen::setNbThreads(1);
  }
  ~SingleThreadScope() {
    omp_set_num_threads(omp_);
    Eigen::setNbThreads(eigen_);
  }
  SingleThreadScope(const SingleThreadScope&) = delete;
  SingleThreadScope& operator=(const SingleThreadScope&) = delete;

 private:
  int omp_, eigen_;
};

double median(std::vector<double> v);

/// Median over `reps` timed passes (after one discarded warm-up pass) of `fn`, divided by
/// `per`, in seconds.
template <typename F>
double median_time(F&& fn, std::size_t reps, std::size_t per) {
  std::vector<double> t;
  fn();
  for (std::size_t r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return median(t) / static_cast<double>(per);
}

/// Single-threaded runtime comparison over `samples` (channels only; labels not needed).
template <typename T>
RuntimeTable benchmark_runtime(const std::vector<ChannelSample>& samples, const WmmseConfig& wcfg,
                               const GenArch& arch, const ParameterSet<T>& gen, std::size_t reps,
                               std::uint64_t seed = 1) {
  if (reps < 5) throw ConfigError("benchmark needs at least 5 repetitions");
  if (samples.empty()) throw ConfigError("benchmark needs at least one sample");
  SingleThreadScope pin;
  RuntimeTable tab;
  tab.n_high = static_cast<std::size_t>(samples.front().h_real.rows());
  tab.n_low = static_cast<std::size_t>(samples.front().h_low.rows());
  tab.n_users = static_cast<std::size_t>(samples.front().h_real.cols());
  tab.samples = samples.size();
  tab.reps = reps;

  std::vector<Tensor<T>> v_low, h_low, z;
  Rng rng(seed);
  for (const auto& s : samples) {
    v_low.push_back(to_tensor<T>(wmmse_solve(s.h_low, wcfg).v));
    h_low.push_back(to_tensor<T>(s.h_low));
    z.push_back(normal_tensor<T>(v_low.back().shape(), rng));
  }
  double sink = 0;  // keeps results observable
  const std::size_t n = samples.size();
  tab.full_wmmse = median_time(
      [&] {
        for (const auto& s : samples) sink += wmmse_solve(s.h_real, wcfg).v(0, 0).real();
      },
      reps, n);
  tab.low_wmmse = median_time(
      [&] {
        for (const auto& s : samples) sink += wmmse_solve(s.h_low, wcfg).v(0, 0).real();
      },
      reps, n);
  tab.forward = median_time(
      [&] {
        for (std::size_t i = 0; i < n; ++i)
          sink += generate(arch, gen, z[i], v_low[i], h_low[i], wcfg.power)(0, 0).real();
      },
      reps, n);
  tab.pipeline = median_time(
      [&] {
        for (std::size_t i = 0; i < n; ++i) {
          const Tensor<T> vl = to_tensor<T>(wmmse_solve(samples[i].h_low, wcfg).v);
          sink += generate(arch, gen, z[i], vl, h_low[i], wcfg.power)(0, 0).real();
        }
      },
      reps, n);
  if (!std::isfinite(sink)) throw NumericalError("benchmark produced non-finite beamformers");
  return tab;
}

struct ScalingPoint {
  std::size_t n_antennas = 0;
  double seconds = 0;        // median per solve
  double mean_iterations = 0;
};

struct ScalingFit {
  std::vector<ScalingPoint> points;
  double exponent = 0;  // least-squares slope of log(time) against log(N)
};

/// Single-threaded full-array WMMSE time for each antenna count, on channels from `scenario`
/// with n_high replaced by each entry of `antennas`.
ScalingFit wmmse_scaling(const ScenarioConfig& scenario, const std::vector<std::size_t>& antennas,
                         const WmmseConfig& wcfg, std::size_t samples, std::size_t reps,
                         std::uint64_t seed);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace beamcast
