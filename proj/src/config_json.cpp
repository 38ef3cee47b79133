// SPDX-License-Identifier: Apache-2.0
#include "beamcast/config_json.hpp"

#include <fstream>
#include <set>

namespace beamcast {

namespace {

void reject_unknown(const Json& j, const std::set<std::string>& known, const char* section) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.contains(k)) throw ConfigError(std::string(section) + ": unknown key '" + k + "'");
}

template <typename V>
void take(const Json& j, const char* key, V& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<V>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

const char* layout_name(ArrayLayout l) { return l == ArrayLayout::kLinear ? "linear" : "planar"; }
const char* subset_name(SubsetMode m) { return m == SubsetMode::kStrided ? "strided" : "contiguous"; }

}  // namespace

Json to_json(const ScenarioConfig& c) {
  return {{"n_users", c.n_users},
          {"n_high", c.n_high},
          {"n_low", c.n_low},
          {"n_rf", c.n_rf},
          {"n_paths", c.n_paths},
          {"spacing_wavelengths", c.spacing_wavelengths},
          {"layout", layout_name(c.layout)},
          {"planar_rows", c.planar_rows},
          {"carrier_hz", c.carrier_hz},
          {"bandwidth_hz", c.bandwidth_hz},
          {"snr_db", c.snr_db},
          // JSON has no infinities; null stands for perfect estimates.
          {"cee_db", c.cee_db == kPerfectEstimate ? Json(nullptr) : Json(c.cee_db)},
          {"los_gain", c.los_gain},
          {"region_x", {c.region_x_min, c.region_x_max}},
          {"region_y", {c.region_y_min, c.region_y_max}},
          {"bs_height", c.bs_height},
          {"user_height", c.user_height},
          {"subset", subset_name(c.subset)},
          {"seed", c.seed}};
}

void merge_json(const Json& j, ScenarioConfig& c) {
  reject_unknown(j,
                 {"n_users", "n_high", "n_low", "n_rf", "n_paths", "spacing_wavelengths", "layout",
                  "planar_rows", "carrier_hz", "bandwidth_hz", "snr_db", "cee_db", "los_gain",
                  "region_x", "region_y", "bs_height", "user_height", "subset", "seed"},
                 "scenario");
  take(j, "n_users", c.n_users);
  take(j, "n_high", c.n_high);
  take(j, "n_low", c.n_low);
  take(j, "n_rf", c.n_rf);
  take(j, "n_paths", c.n_paths);
  take(j, "spacing_wavelengths", c.spacing_wavelengths);
  take(j, "planar_rows", c.planar_rows);
  take(j, "carrier_hz", c.carrier_hz);
  take(j, "bandwidth_hz", c.bandwidth_hz);
  take(j, "snr_db", c.snr_db);
  if (j.contains("cee_db"))
    c.cee_db = j["cee_db"].is_null() ? kPerfectEstimate : j["cee_db"].get<double>();
  take(j, "los_gain", c.los_gain);
  take(j, "bs_height", c.bs_height);
  take(j, "user_height", c.user_height);
  take(j, "seed", c.seed);
  if (j.contains("region_x")) {
    const auto r = j["region_x"].get<std::vector<double>>();
    if (r.size() != 2) throw ConfigError("region_x needs [min, max]");
    c.region_x_min = r[0];
    c.region_x_max = r[1];
  }
  if (j.contains("region_y")) {
    const auto r = j["region_y"].get<std::vector<double>>();
    if (r.size() != 2) throw ConfigError("region_y needs [min, max]");
    c.region_y_min = r[0];
    c.region_y_max = r[1];
  }
  if (j.contains("layout")) {
    const auto s = j["layout"].get<std::string>();
    if (s == "linear") c.layout = ArrayLayout::kLinear;
    else if (s == "planar") c.layout = ArrayLayout::kPlanar;
    else throw ConfigError("layout must be 'linear' or 'planar'");
  }
  if (j.contains("subset")) {
    const auto s = j["subset"].get<std::string>();
    if (s == "strided") c.subset = SubsetMode::kStrided;
    else if (s == "contiguous") c.subset = SubsetMode::kContiguous;
    else throw ConfigError("subset must be 'strided' or 'contiguous'");
  }
}

Json to_json(const TrainConfig& c) {
  return {{"lr_gen", c.lr_gen},
          {"lr_disc", c.lr_disc},
          {"beta", c.beta},
          {"lambda", c.lambda},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"gen_period", c.gen_period},
          {"disc_period", c.disc_period},
          {"schedule", c.schedule == Schedule::kSparseCritic ? "sparse-critic" : "standard"},
          {"rms_decay", c.rms_decay},
          {"rms_epsilon", c.rms_epsilon},
          {"seed", c.seed},
          {"eval_seed", c.eval_seed},
          {"precision", c.precision == Precision::kF32 ? "f32" : "f64"},
          {"power", c.power},
          {"width_scale", c.width_scale}};
}

void merge_json(const Json& j, TrainConfig& c) {
  reject_unknown(j,
                 {"lr_gen", "lr_disc", "beta", "lambda", "epochs", "batch_size", "gen_period",
                  "disc_period", "schedule", "rms_decay", "rms_epsilon", "seed", "eval_seed",
                  "precision", "power", "width_scale"},
                 "train");
  take(j, "lr_gen", c.lr_gen);
  take(j, "lr_disc", c.lr_disc);
  take(j, "beta", c.beta);
  take(j, "lambda", c.lambda);
  take(j, "epochs", c.epochs);
  take(j, "batch_size", c.batch_size);
  take(j, "gen_period", c.gen_period);
  take(j, "disc_period", c.disc_period);
  take(j, "rms_decay", c.rms_decay);
  take(j, "rms_epsilon", c.rms_epsilon);
  take(j, "seed", c.seed);
  take(j, "eval_seed", c.eval_seed);
  take(j, "power", c.power);
  take(j, "width_scale", c.width_scale);
  if (j.contains("schedule")) c.schedule = parse_schedule(j["schedule"].get<std::string>());
  if (j.contains("precision")) c.precision = parse_precision(j["precision"].get<std::string>());
}

Json to_json(const WmmseConfig& c) {
  return {{"power", c.power},
          {"noise_var", c.noise_var},
          {"epsilon", c.epsilon},
          {"max_iterations", c.max_iterations},
          {"bisection_tol", c.bisection_tol},
          {"bisection_max_steps", c.bisection_max_steps},
          {"init", c.init == WmmseInit::kMatchedFilter ? "matched_filter" : "random"},
          {"init_seed", c.init_seed}};
}

void merge_json(const Json& j, WmmseConfig& c) {
  reject_unknown(j,
                 {"power", "noise_var", "epsilon", "max_iterations", "bisection_tol",
                  "bisection_max_steps", "init", "init_seed"},
                 "wmmse");
  take(j, "power", c.power);
  take(j, "noise_var", c.noise_var);
  take(j, "epsilon", c.epsilon);
  take(j, "max_iterations", c.max_iterations);
  take(j, "bisection_tol", c.bisection_tol);
  take(j, "bisection_max_steps", c.bisection_max_steps);
  take(j, "init_seed", c.init_seed);
  if (j.contains("init")) {
    const auto s = j["init"].get<std::string>();
    if (s == "matched_filter") c.init = WmmseInit::kMatchedFilter;
    else if (s == "random") c.init = WmmseInit::kRandom;
    else throw ConfigError("wmmse init must be 'matched_filter' or 'random'");
  }
}

Json to_json(const GanShape& s) {
  const auto& w = s.widths;
  return {{"n_low", s.n_low},
          {"n_high", s.n_high},
          {"n_users", s.n_users},
          {"kernel", s.kernel},
          {"leaky_slope", s.leaky_slope},
          {"widths",
           {{"resize", w.resize},
            {"encoders", w.encoders},
            {"decoders", w.decoders},
            {"disc_first", w.disc_first},
            {"disc_encoders", w.disc_encoders}}}};
}

void merge_json(const Json& j, GanShape& s) {
  reject_unknown(j, {"n_low", "n_high", "n_users", "kernel", "leaky_slope", "widths"}, "gan");
  take(j, "n_low", s.n_low);
  take(j, "n_high", s.n_high);
  take(j, "n_users", s.n_users);
  take(j, "kernel", s.kernel);
  take(j, "leaky_slope", s.leaky_slope);
  if (j.contains("widths")) {
    const auto& w = j["widths"];
    reject_unknown(w, {"resize", "encoders", "decoders", "disc_first", "disc_encoders"},
                   "gan.widths");
    take(w, "resize", s.widths.resize);
    take(w, "encoders", s.widths.encoders);
    take(w, "decoders", s.widths.decoders);
    take(w, "disc_first", s.widths.disc_first);
    take(w, "disc_encoders", s.widths.disc_encoders);
  }
}

WmmseConfig RunConfig::wmmse_or_default() const {
  return wmmse ? *wmmse : WmmseConfig::from_snr_db(scenario.snr_db, train.power);
}

void merge_json(const Json& j, RunConfig& c) {
  reject_unknown(j, {"scenario", "train", "wmmse", "description", "license"}, "config");
  if (j.contains("scenario")) merge_json(j["scenario"], c.scenario);
  if (j.contains("train")) merge_json(j["train"], c.train);
  if (j.contains("wmmse")) {
    WmmseConfig w = c.wmmse_or_default();
    merge_json(j["wmmse"], w);
    c.wmmse = w;
  }
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  RunConfig c;
  merge_json(j, c);
  return c;
}

}  // namespace beamcast
