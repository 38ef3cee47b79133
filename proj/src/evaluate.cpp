// SPDX-License-Identifier: Apache-2.0
#include "beamcast/evaluate.hpp"

#include <numeric>

namespace beamcast {

Stat mean_std(const std::vector<double>& v) {
  Stat s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double acc = 0;
  for (double x : v) acc += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(acc / static_cast<double>(v.size()));
  return s;
}

void EvalReport::summarize(const std::vector<ComplexMatrix>& targets,
                           const std::vector<ComplexMatrix>& ests) {
  std::vector<double> w, g, z;
  for (const auto& r : rows) {
    w.push_back(r.se_wmmse);
    g.push_back(r.se_generated);
    z.push_back(r.se_zero_pad);
  }
  se_wmmse = mean_std(w);
  se_generated = mean_std(g);
  se_zero_pad = mean_std(z);
  nmse_db = targets.empty() ? 0.0 : beamcast::nmse_db(targets, ests);
}

double median(std::vector<double> v) {
  if (v.empty()) throw ConfigError("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope fit needs >= 2 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

ScalingFit wmmse_scaling(const ScenarioConfig& scenario, const std::vector<std::size_t>& antennas,
                         const WmmseConfig& wcfg, std::size_t samples, std::size_t reps,
                         std::uint64_t seed) {
  SingleThreadScope pin;
  ScalingFit fit;
  std::vector<double> xs, ys;
  for (std::size_t n : antennas) {
    ScenarioConfig sc = scenario;
    sc.n_high = n;
    sc.n_low = n;
    std::vector<ComplexMatrix> hs;
    for (std::size_t i = 0; i < samples; ++i)
      hs.push_back(generate_sample(sc, derive_seed(seed, i), i).h_real);
    double iters = 0;
    for (const auto& h : hs) iters += wmmse_solve(h, wcfg).iterations;
    double sink = 0;
    ScalingPoint p;
    p.n_antennas = n;
    p.mean_iterations = iters / static_cast<double>(samples);
    p.seconds = median_time(
        [&] {
          for (const auto& h : hs) sink += wmmse_solve(h, wcfg).v(0, 0).real();
        },
        reps, samples);
    if (!std::isfinite(sink)) throw NumericalError("scaling benchmark diverged");
    fit.points.push_back(p);
    xs.push_back(static_cast<double>(n));
    ys.push_back(p.seconds);
  }
  fit.exponent = loglog_slope(xs, ys);
  return fit;
}

}  // namespace beamcast
