// SPDX-License-Identifier: Apache-2.0
#include "beamcast/trainer.hpp"

namespace beamcast {

Schedule parse_schedule(const std::string& s) {
  if (s == "sparse-critic") return Schedule::kSparseCritic;
  if (s == "standard") return Schedule::kStandard;
  throw ConfigError("schedule must be 'sparse-critic' or 'standard', got '" + s + "'");
}

Precision parse_precision(const std::string& s) {
  if (s == "f32") return Precision::kF32;
  if (s == "f64") return Precision::kF64;
  throw ConfigError("precision must be 'f32' or 'f64', got '" + s + "'");
}

void TrainConfig::validate() const {
  if (!(lr_gen > 0.0) || !(lr_disc > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(beta >= 0.0) || !(lambda >= 0.0)) throw ConfigError("beta and lambda must be >= 0");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (gen_period == 0 || disc_period == 0) throw ConfigError("update periods must be >= 1");
  if (!(rms_decay > 0.0 && rms_decay < 1.0)) throw ConfigError("rmsprop decay must be in (0, 1)");
  if (!(rms_epsilon > 0.0)) throw ConfigError("rmsprop epsilon must be positive");
  if (!(power > 0.0)) throw ConfigError("power budget must be positive");
  if (!(width_scale > 0.0)) throw ConfigError("width scale must be positive");
}

bool TrainTrace::same_values(const TrainTrace& o) const {
  if (steps.size() != o.steps.size() || epoch_test_nmse_db != o.epoch_test_nmse_db) return false;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto& a = steps[i];
    const auto& b = o.steps[i];
    if (a.epoch != b.epoch || a.step != b.step || a.sample != b.sample || a.l1 != b.l1 ||
        a.l2 != b.l2 || a.gp != b.gp || a.d_real != b.d_real || a.d_fake != b.d_fake ||
        a.gen_updated != b.gen_updated || a.disc_updated != b.disc_updated)
      return false;
  }
  return true;
}

GanShape gan_shape_for(const ScenarioConfig& sc, const TrainConfig& cfg) {
  GanShape s;
  s.n_low = sc.n_low;
  s.n_high = sc.n_high;
  s.n_users = sc.n_users;
  s.widths = GanWidths{}.scaled(cfg.width_scale);
  return s;
}

}  // namespace beamcast
