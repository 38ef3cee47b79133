// SPDX-License-Identifier: Apache-2.0
//
// Synthetic narrow-band multi-user mmWave channels: geometric multipath with a dominant
// line-of-sight path, per-user free-space path loss, estimation error injection and
// low-/high-dimensional antenna subsets.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "beamcast/complex_matrix.hpp"
#include "beamcast/random.hpp"

namespace beamcast {

enum class ArrayLayout { kLinear, kPlanar };
enum class SubsetMode { kStrided, kContiguous };

struct ArrayGeometry {
  std::size_t n_antennas = 1;
  double spacing_wavelengths = 0.5;
  ArrayLayout layout = ArrayLayout::kLinear;
  // Planar only; rows * cols == n_antennas. Elements are indexed row-major.
  std::size_t rows = 0;
  std::size_t cols = 0;

  void validate() const;
};

struct Path {
  cdouble gain;
  double azimuth = 0.0;    // radians, [-pi, pi]
  double elevation = 0.0;  // radians, [-pi/2, pi/2]
};

struct PathSet {
  std::vector<Path> paths;
  double path_loss = 1.0;  // linear, > 0
  std::array<double, 3> user_position{};  // metres, BS at origin
};

struct ScenarioConfig {
  std::size_t n_users = 4;
  std::size_t n_high = 32;
  std::size_t n_low = 8;
  std::size_t n_rf = 32;
  std::size_t n_paths = 5;
  double spacing_wavelengths = 0.5;
  ArrayLayout layout = ArrayLayout::kLinear;
  std::size_t planar_rows = 0;  // planar only; n_high / planar_rows columns
  double carrier_hz = 60e9;
  double bandwidth_hz = 50e6;
  double snr_db = 10.0;
  /// Channel estimation error in dB; -infinity means perfect estimates.
  double cee_db = -20.0;
  double los_gain = 2.0;  // amplitude of path 0 relative to the NLOS paths
  // User drop region (metres) relative to the BS at the origin, array boresight along +x.
  double region_x_min = 10.0, region_x_max = 100.0;
  double region_y_min = -50.0, region_y_max = 50.0;
  double bs_height = 10.0, user_height = 1.5;
  SubsetMode subset = SubsetMode::kStrided;
  std::uint64_t seed = 1;

  void validate() const;
  ArrayGeometry high_geometry() const;
};

/// One user drop: estimated high-dimensional channel, its antenna-subset rows, and the
/// WMMSE beamformers for both (empty until labeled).
struct ChannelSample {
  ComplexMatrix h_real;  // n_high x n_users
  ComplexMatrix h_low;   // n_low x n_users
  ComplexMatrix v_real;  // n_high x n_users
  ComplexMatrix v_low;   // n_low x n_users
  std::uint64_t seed = 0;
  std::size_t index = 0;
  std::vector<double> path_loss;  // per user
};

struct Dataset {
  ScenarioConfig config;
  std::uint64_t seed = 0;
  bool labeled = false;
  std::vector<ChannelSample> samples;
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// a_m = exp(j*2*pi*d*m*sin(az)*cos(el)) for a linear array. A planar array adds the vertical
/// phase exp(j*2*pi*d*row*sin(el)) and uses the column index in the horizontal term.
ComplexVector array_response(const ArrayGeometry& geom, double azimuth, double elevation);

/// Random multipath for one user drop.
PathSet synth_paths(const ScenarioConfig& cfg, Rng& rng);

/// h = sqrt(N / path_loss) * sum_l gain_l * a(az_l, el_l).
ComplexVector assemble_channel(const PathSet& paths, const ArrayGeometry& geom);

/// H / max |H_ij|. Throws NumericalError for an all-zero matrix.
ComplexMatrix normalize_channel(const ComplexMatrix& h);

/// H + E with E white circular Gaussian, E|E_ij|^2 = 10^(cee_db/10) * ||H||_F^2 / numel.
/// cee_db = -infinity returns H unchanged.
ComplexMatrix inject_cee(const ComplexMatrix& h, double cee_db, Rng& rng);

constexpr double kPerfectEstimate = -std::numeric_limits<double>::infinity();

/// Row indices of the low-dimensional antenna subset inside the full array.
std::vector<std::size_t> subset_rows(std::size_t n_high, std::size_t n_low,
                                     SubsetMode mode = SubsetMode::kStrided);

ComplexMatrix subsample_channel(const ComplexMatrix& h, std::size_t n_low,
                                SubsetMode mode = SubsetMode::kStrided);

/// One sample from its own seed; deterministic.
ChannelSample generate_sample(const ScenarioConfig& cfg, std::uint64_t sample_seed,
                              std::size_t index);

/// `n_samples` drops with seeds derived from `seed`, randomly split train:test =
/// train_parts:test_parts. Generation runs in parallel over samples (BEAMCAST_THREADS caps
/// the worker count) and yields the same bytes as a serial run.
Dataset generate_dataset(const ScenarioConfig& cfg, std::size_t n_samples, std::uint64_t seed,
                         std::size_t train_parts = 4, std::size_t test_parts = 1);

/// Worker cap from BEAMCAST_THREADS, or 0 when unset.
int configured_threads();

}  // namespace beamcast
