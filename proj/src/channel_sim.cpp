// SPDX-License-Identifier: Apache-2.0
#include "beamcast/channel_sim.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <numeric>
#include <string>

namespace beamcast {

namespace {
constexpr double kSpeedOfLight = 299792458.0;
}

void ArrayGeometry::validate() const {
  if (n_antennas == 0) throw ConfigError("array needs at least one antenna");
  if (!(spacing_wavelengths > 0.0)) throw ConfigError("antenna spacing must be positive");
  if (layout == ArrayLayout::kPlanar && rows * cols != n_antennas)
    throw ConfigError("planar array rows*cols (" + std::to_string(rows * cols) +
                      ") != antenna count " + std::to_string(n_antennas));
}

void ScenarioConfig::validate() const {
  if (n_users == 0) throw ConfigError("n_users must be positive");
  if (n_low == 0 || n_high == 0) throw ConfigError("antenna counts must be positive");
  if (n_low > n_high) throw ConfigError("n_low must not exceed n_high");
  if (n_high % n_low != 0)
    throw ConfigError("n_low (" + std::to_string(n_low) + ") must divide n_high (" +
                      std::to_string(n_high) + ")");
  if (n_paths == 0) throw ConfigError("n_paths must be positive");
  if (!(spacing_wavelengths > 0.0)) throw ConfigError("antenna spacing must be positive");
  if (!(carrier_hz > 0.0)) throw ConfigError("carrier frequency must be positive");
  if (!(los_gain > 0.0)) throw ConfigError("los_gain must be positive");
  if (std::isnan(cee_db) || cee_db == std::numeric_limits<double>::infinity())
    throw ConfigError("cee_db must be finite or -inf");
  if (!(region_x_max >= region_x_min) || !(region_y_max >= region_y_min))
    throw ConfigError("empty user drop region");
  high_geometry().validate();
}

ArrayGeometry ScenarioConfig::high_geometry() const {
  ArrayGeometry g;
  g.n_antennas = n_high;
  g.spacing_wavelengths = spacing_wavelengths;
  g.layout = layout;
  if (layout == ArrayLayout::kPlanar) {
    g.rows = planar_rows;
    g.cols = planar_rows ? n_high / planar_rows : 0;
  }
  return g;
}

ComplexVector array_response(const ArrayGeometry& geom, double azimuth, double elevation) {
  geom.validate();
  const double k = 2.0 * std::numbers::pi * geom.spacing_wavelengths;
  ComplexVector a(geom.n_antennas);
  if (geom.layout == ArrayLayout::kLinear) {
    const double u = std::sin(azimuth) * std::cos(elevation);
    for (std::size_t m = 0; m < geom.n_antennas; ++m)
      a(m) = std::polar(1.0, k * static_cast<double>(m) * u);
  } else {
    const double u = std::sin(azimuth) * std::cos(elevation);
    const double v = std::sin(elevation);
    for (std::size_t r = 0; r < geom.rows; ++r)
      for (std::size_t c = 0; c < geom.cols; ++c)
        a(r * geom.cols + c) =
            std::polar(1.0, k * (static_cast<double>(c) * u + static_cast<double>(r) * v));
  }
  return a;
}

PathSet synth_paths(const ScenarioConfig& cfg, Rng& rng) {
  std::uniform_real_distribution<double> ux(cfg.region_x_min, cfg.region_x_max);
  std::uniform_real_distribution<double> uy(cfg.region_y_min, cfg.region_y_max);
  std::uniform_real_distribution<double> uaz(-std::numbers::pi, std::numbers::pi);
  std::uniform_real_distribution<double> uel(-std::numbers::pi / 2, std::numbers::pi / 2);

  PathSet ps;
  const double x = ux(rng);
  const double y = uy(rng);
  const double z = cfg.user_height - cfg.bs_height;
  ps.user_position = {x, y, z};
  const double ground = std::hypot(x, y);
  const double dist = std::hypot(ground, z);
  const double fspl = 4.0 * std::numbers::pi * dist * cfg.carrier_hz / kSpeedOfLight;
  ps.path_loss = fspl * fspl;

  ps.paths.reserve(cfg.n_paths);
  // Path 0 is the line-of-sight path towards the user position.
  ps.paths.push_back({cfg.los_gain * complex_normal(rng), std::atan2(y, x), std::atan2(z, ground)});
  for (std::size_t l = 1; l < cfg.n_paths; ++l) {
    const cdouble g = complex_normal(rng);
    const double az = uaz(rng);
    const double el = uel(rng);
    ps.paths.push_back({g, az, el});
  }
  return ps;
}

ComplexVector assemble_channel(const PathSet& paths, const ArrayGeometry& geom) {
  if (!(paths.path_loss > 0.0)) throw ConfigError("path loss must be positive");
  ComplexVector h = ComplexVector::Zero(geom.n_antennas);
  for (const auto& p : paths.paths) h += p.gain * array_response(geom, p.azimuth, p.elevation);
  return h * std::sqrt(static_cast<double>(geom.n_antennas) / paths.path_loss);
}

ComplexMatrix normalize_channel(const ComplexMatrix& h) {
  const double peak = h.size() ? h.cwiseAbs().maxCoeff() : 0.0;
  if (!(peak > 0.0)) throw NumericalError("normalize_channel: all-zero channel");
  return h / peak;
}

ComplexMatrix inject_cee(const ComplexMatrix& h, double cee_db, Rng& rng) {
  if (cee_db == kPerfectEstimate) return h;
  if (!std::isfinite(cee_db)) throw ConfigError("cee_db must be finite or -inf");
  const double ratio = std::pow(10.0, cee_db / 10.0);
  const double variance = ratio * h.squaredNorm() / static_cast<double>(h.size());
  ComplexMatrix out = h;
  for (Eigen::Index c = 0; c < out.cols(); ++c)
    for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) += complex_normal(rng, variance);
  return out;
}

std::vector<std::size_t> subset_rows(std::size_t n_high, std::size_t n_low, SubsetMode mode) {
  if (n_low == 0 || n_low > n_high)
    throw DimensionError("subset size " + std::to_string(n_low) + " invalid for " +
                             std::to_string(n_high) + " antennas",
                         0);
  std::vector<std::size_t> rows(n_low);
  if (mode == SubsetMode::kContiguous) {
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
  }
  if (n_high % n_low != 0)
    throw DimensionError("strided subset needs n_low | n_high (" + std::to_string(n_low) +
                             " vs " + std::to_string(n_high) + ")",
                         0);
  const std::size_t stride = n_high / n_low;
  for (std::size_t i = 0; i < n_low; ++i) rows[i] = i * stride;
  return rows;
}

ComplexMatrix subsample_channel(const ComplexMatrix& h, std::size_t n_low, SubsetMode mode) {
  const auto rows = subset_rows(static_cast<std::size_t>(h.rows()), n_low, mode);
  ComplexMatrix out(static_cast<Eigen::Index>(n_low), h.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = h.row(rows[i]);
  return out;
}

ChannelSample generate_sample(const ScenarioConfig& cfg, std::uint64_t sample_seed,
                              std::size_t index) {
  Rng rng(sample_seed);
  const ArrayGeometry geom = cfg.high_geometry();
  ChannelSample s;
  s.seed = sample_seed;
  s.index = index;
  ComplexMatrix h(static_cast<Eigen::Index>(cfg.n_high), static_cast<Eigen::Index>(cfg.n_users));
  for (std::size_t k = 0; k < cfg.n_users; ++k) {
    const PathSet paths = synth_paths(cfg, rng);
    s.path_loss.push_back(paths.path_loss);
    h.col(k) = assemble_channel(paths, geom);
  }
  // Estimation error is applied to the full array; the low-dimensional channel is its subset.
  s.h_real = inject_cee(normalize_channel(h), cfg.cee_db, rng);
  s.h_low = subsample_channel(s.h_real, cfg.n_low, cfg.subset);
  return s;
}

int configured_threads() {
  const char* env = std::getenv("BEAMCAST_THREADS");
  if (!env) return 0;
  const int n = std::atoi(env);
  return n > 0 ? n : 0;
}

Dataset generate_dataset(const ScenarioConfig& cfg, std::size_t n_samples, std::uint64_t seed,
                         std::size_t train_parts, std::size_t test_parts) {
  cfg.validate();
  if (n_samples < 2) throw ConfigError("dataset needs at least 2 samples");
  if (train_parts == 0 || test_parts == 0) throw ConfigError("split ratio parts must be positive");

  Dataset ds;
  ds.config = cfg;
  ds.config.seed = seed;
  ds.seed = seed;
  ds.samples.resize(n_samples);

  const int threads = configured_threads() ? configured_threads() : omp_get_max_threads();
  const long n = static_cast<long>(n_samples);
#pragma omp parallel for num_threads(threads) schedule(dynamic)
  for (long i = 0; i < n; ++i)
    ds.samples[i] = generate_sample(cfg, derive_seed(seed, static_cast<std::uint64_t>(i)),
                                    static_cast<std::size_t>(i));

  std::vector<std::size_t> order(n_samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(seed, ~std::uint64_t{0}));
  std::shuffle(order.begin(), order.end(), split_rng);
  std::size_t n_train = n_samples * train_parts / (train_parts + test_parts);
  n_train = std::clamp<std::size_t>(n_train, 1, n_samples - 1);
  ds.train.assign(order.begin(), order.begin() + static_cast<long>(n_train));
  ds.test.assign(order.begin() + static_cast<long>(n_train), order.end());
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.test.begin(), ds.test.end());
  return ds;
}

}  // namespace beamcast
