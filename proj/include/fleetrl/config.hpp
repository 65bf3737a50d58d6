// Copyright 2026 The fleetrl Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FLEETRL_CONFIG_HPP_
#define FLEETRL_CONFIG_HPP_

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "fleetrl/demand.hpp"
#include "fleetrl/game.hpp"
#include "fleetrl/sim.hpp"

namespace fleetrl {

// JSON forms of the structured configs. Parsing fills unspecified fields
// with defaults and throws InputError on malformed values.
//
// Rate matrices are either a flat row-major array of n_q * n_q numbers or
// an object {"fill": x, "diagonal": y, "entries": [[i, j, v], ...]}.
GridGeometry grid_from_json(const nlohmann::json& j);
nlohmann::json grid_to_json(const GridGeometry& grid);

ScenarioSpec scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioSpec& spec);

GameConfig game_config_from_json(const nlohmann::json& j);
nlohmann::json game_config_to_json(const GameConfig& cfg);

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json sim_config_to_json(const SimConfig& cfg);

// {"base": {...}, "numerator": policy, "denominator": policy, "seeds": [...],
//  "n_agents": [...], "r_comm": [...]}
SweepSpec sweep_from_json(const nlohmann::json& j);

nlohmann::json read_json_file(const std::filesystem::path& path);
SimConfig load_sim_config(const std::filesystem::path& path);

}  // namespace fleetrl

#endif  // FLEETRL_CONFIG_HPP_
