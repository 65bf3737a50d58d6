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

#include "fleetrl/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <string_view>

#include <fmt/format.h>

namespace fleetrl {

using nlohmann::json;

namespace {

// Rejects non-objects and keys outside the allowed set, so typos surface.
void expect_keys(const json& j, std::initializer_list<std::string_view> allowed,
                 std::string_view what) {
  if (!j.is_object()) throw InputError(fmt::format("{} config must be an object", what));
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw InputError(fmt::format("unknown key '{}' in {} config", key, what));
    }
  }
}

std::vector<double> rates_from_json(const json& j, std::size_t n_q) {
  if (j.is_array()) {
    auto rates = j.get<std::vector<double>>();
    if (rates.size() != n_q * n_q) {
      throw InputError(fmt::format("rate matrix has {} entries, expected {}", rates.size(), n_q * n_q));
    }
    return rates;
  }
  expect_keys(j, {"fill", "diagonal", "entries"}, "rates");
  const double fill = j.value("fill", 0.0);
  std::vector<double> rates(n_q * n_q, fill);
  if (j.contains("diagonal")) {
    const double d = j.at("diagonal").get<double>();
    for (std::size_t i = 0; i < n_q; ++i) rates[i * n_q + i] = d;
  }
  if (j.contains("entries")) {
    for (const auto& e : j.at("entries")) {
      const auto i = e.at(0).get<std::size_t>();
      const auto k = e.at(1).get<std::size_t>();
      if (i >= n_q || k >= n_q) throw InputError(fmt::format("rate entry {},{} outside the map", i, k));
      rates[i * n_q + k] = e.at(2).get<double>();
    }
  }
  return rates;
}

DemandRegime regime_from_json(const json& j, std::size_t n_q, const DemandRegime* fallback) {
  if (fallback) {
    expect_keys(j, {"kind", "start_tick", "rates", "fare_scale"}, "drift event");
  } else {
    expect_keys(j, {"rates", "fare_scale"}, "demand");
  }
  DemandRegime r;
  if (j.contains("rates")) {
    r.rates = rates_from_json(j.at("rates"), n_q);
  } else if (fallback) {
    r.rates = fallback->rates;
  } else {
    r.rates.assign(n_q * n_q, 0.0);
  }
  r.fare_scale = j.value("fare_scale", fallback ? fallback->fare_scale : 1.0);
  return r;
}

json regime_to_json(const DemandRegime& r) {
  return {{"rates", r.rates}, {"fare_scale", r.fare_scale}};
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InputError(fmt::format("malformed {} config: {}", what, e.what()));
  }
}

}  // namespace

GridGeometry grid_from_json(const json& j) {
  return guarded("grid", [&] {
    expect_keys(j, {"rows", "cols", "cell_km", "origin", "projection"}, "grid");
    Point origin{};
    if (j.contains("origin")) origin = {j.at("origin").at(0).get<double>(), j.at("origin").at(1).get<double>()};
    GridGeometry grid(j.value("rows", std::size_t{7}), j.value("cols", std::size_t{11}),
                      j.value("cell_km", 1.0), origin);
    if (j.contains("projection")) {
      const json& p = j.at("projection");
      grid.set_projection({p.at("ref_lon").get<double>(), p.at("ref_lat").get<double>()});
    }
    return grid;
  });
}

json grid_to_json(const GridGeometry& grid) {
  json j = {{"rows", grid.rows()},
            {"cols", grid.cols()},
            {"cell_km", grid.cell_km()},
            {"origin", {grid.origin().x, grid.origin().y}}};
  if (grid.projection()) {
    j["projection"] = {{"ref_lon", grid.projection()->ref_lon}, {"ref_lat", grid.projection()->ref_lat}};
  }
  return j;
}

ScenarioSpec scenario_from_json(const json& j) {
  return guarded("scenario", [&] {
    expect_keys(j, {"grid", "demand", "drift", "fare", "speed_km_per_tick", "min_duration", "motion"},
                "scenario");
    ScenarioSpec spec;
    spec.grid = grid_from_json(j.value("grid", json::object()));
    const std::size_t n_q = spec.grid.n_cells();
    spec.initial = regime_from_json(j.value("demand", json::object()), n_q, nullptr);
    if (j.contains("drift")) {
      for (const auto& e : j.at("drift")) {
        DriftEvent ev;
        const auto kind = e.value("kind", std::string("step"));
        if (kind == "step") {
          ev.kind = DriftEvent::Kind::kStep;
          ev.regime = regime_from_json(e, n_q, &spec.initial);
        } else if (kind == "sinusoid") {
          expect_keys(e, {"kind", "start_tick", "period", "amplitude"}, "drift event");
          ev.kind = DriftEvent::Kind::kSinusoid;
          ev.period = e.value("period", ev.period);
          ev.amplitude = e.value("amplitude", ev.amplitude);
        } else {
          throw InputError(fmt::format("unknown drift kind '{}'", kind));
        }
        ev.start_tick = e.value("start_tick", std::int64_t{0});
        spec.drift.push_back(std::move(ev));
      }
    }
    if (j.contains("fare")) {
      const json& f = j.at("fare");
      expect_keys(f, {"base", "per_km", "noise_sd"}, "fare");
      spec.fare.base = f.value("base", spec.fare.base);
      spec.fare.per_km = f.value("per_km", spec.fare.per_km);
      spec.fare.noise_sd = f.value("noise_sd", spec.fare.noise_sd);
    }
    spec.speed_km_per_tick = j.value("speed_km_per_tick", spec.speed_km_per_tick);
    spec.min_duration = j.value("min_duration", spec.min_duration);
    if (j.contains("motion")) spec.motion = rates_from_json(j.at("motion"), n_q);
    spec.validate();
    return spec;
  });
}

json scenario_to_json(const ScenarioSpec& spec) {
  json drift = json::array();
  for (const auto& e : spec.drift) {
    json ev = {{"start_tick", e.start_tick}};
    if (e.kind == DriftEvent::Kind::kStep) {
      ev["kind"] = "step";
      ev["rates"] = e.regime.rates;
      ev["fare_scale"] = e.regime.fare_scale;
    } else {
      ev["kind"] = "sinusoid";
      ev["period"] = e.period;
      ev["amplitude"] = e.amplitude;
    }
    drift.push_back(std::move(ev));
  }
  json j = {{"grid", grid_to_json(spec.grid)},
            {"demand", regime_to_json(spec.initial)},
            {"drift", drift},
            {"fare", {{"base", spec.fare.base}, {"per_km", spec.fare.per_km}, {"noise_sd", spec.fare.noise_sd}}},
            {"speed_km_per_tick", spec.speed_km_per_tick},
            {"min_duration", spec.min_duration}};
  if (!spec.motion.empty()) j["motion"] = spec.motion;
  return j;
}

GameConfig game_config_from_json(const json& j) {
  return guarded("game", [&] {
    expect_keys(j, {"r_c", "r_comm", "C", "C_prime", "tau", "pooling"}, "game");
    GameConfig c;
    c.r_c = j.value("r_c", c.r_c);
    c.r_comm = j.value("r_comm", c.r_comm);
    c.C = j.value("C", c.C);
    c.C_prime = j.value("C_prime", c.C_prime);
    c.tau = j.value("tau", c.tau);
    c.pooling = j.value("pooling", c.pooling);
    c.validate();
    return c;
  });
}

json game_config_to_json(const GameConfig& c) {
  return {{"r_c", c.r_c}, {"r_comm", c.r_comm}, {"C", c.C},
          {"C_prime", c.C_prime}, {"tau", c.tau}, {"pooling", c.pooling}};
}

SimConfig sim_config_from_json(const json& j) {
  return guarded("simulation", [&] {
    expect_keys(j, {"n_agents", "horizon", "seed", "policy", "scenario", "trips_file",
                    "trips_tick_offset", "game", "gamma", "zeta", "mpi", "request_ttl",
                    "snapshot_every", "tracked_pairs", "shadow_centralized", "learning_log"},
                "simulation");
    SimConfig c;
    c.n_agents = j.value("n_agents", c.n_agents);
    c.horizon = j.value("horizon", c.horizon);
    c.seed = j.value("seed", c.seed);
    if (j.contains("policy")) c.policy = parse_policy(j.at("policy").get<std::string>());
    c.scenario = scenario_from_json(j.value("scenario", json::object()));
    c.trips_file = j.value("trips_file", c.trips_file);
    c.trips_tick_offset = j.value("trips_tick_offset", c.trips_tick_offset);
    c.game = game_config_from_json(j.value("game", json::object()));
    c.gamma = j.value("gamma", c.gamma);
    c.zeta = j.value("zeta", c.zeta);
    if (j.contains("mpi")) {
      const json& m = j.at("mpi");
      expect_keys(m, {"eval_sweeps", "tol", "max_iterations"}, "mpi");
      c.mpi.eval_sweeps = m.value("eval_sweeps", c.mpi.eval_sweeps);
      c.mpi.tol = m.value("tol", c.mpi.tol);
      c.mpi.max_iterations = m.value("max_iterations", c.mpi.max_iterations);
    }
    c.request_ttl = j.value("request_ttl", c.request_ttl);
    c.snapshot_every = j.value("snapshot_every", c.snapshot_every);
    if (j.contains("tracked_pairs")) {
      for (const auto& p : j.at("tracked_pairs")) {
        c.tracked_pairs.emplace_back(to_cell(p.at(0).get<std::size_t>()),
                                     to_cell(p.at(1).get<std::size_t>()));
      }
    }
    c.shadow_centralized = j.value("shadow_centralized", c.shadow_centralized);
    c.learning_log = j.value("learning_log", c.learning_log);
    c.validate();
    return c;
  });
}

json sim_config_to_json(const SimConfig& c) {
  json pairs = json::array();
  for (const auto& [s, d] : c.tracked_pairs) pairs.push_back({s.value(), d.value()});
  return {{"n_agents", c.n_agents},
          {"horizon", c.horizon},
          {"seed", c.seed},
          {"policy", std::string(policy_name(c.policy))},
          {"scenario", scenario_to_json(c.scenario)},
          {"trips_file", c.trips_file},
          {"trips_tick_offset", c.trips_tick_offset},
          {"game", game_config_to_json(c.game)},
          {"gamma", c.gamma},
          {"zeta", c.zeta},
          {"mpi", {{"eval_sweeps", c.mpi.eval_sweeps}, {"tol", c.mpi.tol}, {"max_iterations", c.mpi.max_iterations}}},
          {"request_ttl", c.request_ttl},
          {"snapshot_every", c.snapshot_every},
          {"tracked_pairs", pairs},
          {"shadow_centralized", c.shadow_centralized},
          {"learning_log", c.learning_log}};
}

SweepSpec sweep_from_json(const json& j) {
  return guarded("sweep", [&] {
    expect_keys(j, {"base", "numerator", "denominator", "seeds", "n_agents", "r_comm"}, "sweep");
    SweepSpec spec;
    spec.base = sim_config_from_json(j.value("base", json::object()));
    if (j.contains("numerator")) spec.numerator = parse_policy(j.at("numerator").get<std::string>());
    if (j.contains("denominator")) spec.denominator = parse_policy(j.at("denominator").get<std::string>());
    spec.seeds = j.value("seeds", spec.seeds);
    spec.n_agents = j.value("n_agents", spec.n_agents);
    spec.r_comm = j.value("r_comm", spec.r_comm);
    for (double r : spec.r_comm) {
      GameConfig g = spec.base.game;
      g.r_comm = r;
      g.validate();
    }
    return spec;
  });
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("{} is not valid JSON: {}", path.string(), e.what()));
  }
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  return sim_config_from_json(read_json_file(path));
}

}  // namespace fleetrl
