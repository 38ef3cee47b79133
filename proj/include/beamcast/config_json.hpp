// SPDX-License-Identifier: Apache-2.0
//
// JSON mapping of the scenario, WMMSE and training configurations. Missing keys keep their
// defaults, unknown keys are rejected.
#pragma once

#include "json.hpp"

#include "beamcast/channel_sim.hpp"
#include "beamcast/trainer.hpp"
#include "beamcast/wmmse.hpp"

namespace beamcast {

using Json = nlohmann::json;

Json to_json(const ScenarioConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const WmmseConfig& c);
Json to_json(const GanShape& s);

/// Overwrites the fields of `c` present in `j`.
void merge_json(const Json& j, ScenarioConfig& c);
void merge_json(const Json& j, TrainConfig& c);
void merge_json(const Json& j, WmmseConfig& c);
void merge_json(const Json& j, GanShape& s);

/// Config file layout: {"scenario": {...}, "train": {...}, "wmmse": {...}}.
struct RunConfig {
  ScenarioConfig scenario;
  TrainConfig train;
  std::optional<WmmseConfig> wmmse;  // default: derived from the scenario SNR

  WmmseConfig wmmse_or_default() const;
};

RunConfig load_run_config(const std::string& path);
void merge_json(const Json& j, RunConfig& c);

}  // namespace beamcast
