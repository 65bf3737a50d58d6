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

#ifndef FLEETRL_DEMAND_HPP_
#define FLEETRL_DEMAND_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fleetrl/geometry.hpp"
#include "fleetrl/types.hpp"

namespace fleetrl {

// One ride. duration is in ticks, fare in currency units.
struct TripRecord {
  CellId pickup;
  CellId dropoff;
  std::int64_t start_time = 0;
  double duration = 1.0;
  double fare = 0.0;

  friend bool operator==(const TripRecord&, const TripRecord&) = default;
};

// Per cell pair request probability L, mean reward D and motion factor M,
// stored row-major over n_q x n_q.
class DemandModel {
 public:
  DemandModel() = default;
  // All-zero L and D, M = 1.
  explicit DemandModel(std::size_t n_q);

  std::size_t n_cells() const { return n_q_; }

  double probability(CellId from, CellId to) const { return l_[at(from, to)]; }
  double reward(CellId from, CellId to) const { return d_[at(from, to)]; }
  double motion(CellId from, CellId to) const { return m_[at(from, to)]; }
  void set_probability(CellId from, CellId to, double v) { l_[at(from, to)] = v; }
  void set_reward(CellId from, CellId to, double v) { d_[at(from, to)] = v; }
  void set_motion(CellId from, CellId to, double v) { m_[at(from, to)] = v; }

  // Sum over destinations j != from of L[from, j]; the MDP needs this < 1.
  double departure_mass(CellId from) const;

  // Throws InputError naming the first violated invariant.
  void validate() const;

  std::span<const double> probabilities() const { return l_; }
  std::span<const double> rewards() const { return d_; }
  std::span<const double> motions() const { return m_; }

  friend bool operator==(const DemandModel&, const DemandModel&) = default;

 private:
  std::size_t at(CellId from, CellId to) const {
    return from.value() * n_q_ + to.value();
  }

  std::size_t n_q_ = 0;
  std::vector<double> l_;
  std::vector<double> d_;
  std::vector<double> m_;
};

struct IngestStats {
  std::size_t rows = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  // More than half of the data rows were rejected.
  bool high_rejection = false;
};

struct IngestResult {
  std::vector<TripRecord> trips;
  IngestStats stats;
};

// Thrown when the source itself cannot be read. row is 1-based (the header
// is row 1); 0 means the source could not be opened.
class IngestError : public InputError {
 public:
  IngestError(const std::string& what, std::size_t row)
      : InputError(what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// Delimited text with a header. Either cell columns (pickup_cell,
// dropoff_cell) or point columns (pickup_lon, pickup_lat, dropoff_lon,
// dropoff_lat; mapped through the geometry's projection) plus start_time,
// duration and fare. Rows that fail validation are dropped and counted.
IngestResult ingest_trips(std::istream& in, const GridGeometry& geometry,
                          char delimiter = ',');
IngestResult ingest_trips_file(const std::filesystem::path& path,
                               const GridGeometry& geometry,
                               char delimiter = ',');

struct EstimateOptions {
  // Length of one observation window in ticks.
  std::int64_t window_ticks = 1;
  // Observation period. Defaults to the span of the trip timestamps.
  std::optional<std::int64_t> first_tick;
  std::optional<std::int64_t> n_windows;
  // Row-major n_q x n_q motion factors; empty means all ones.
  std::vector<double> motion;
  // Rows whose off-diagonal request mass reaches 1 are scaled down to this.
  double max_departure_mass = 0.99;
};

// idle_obs[i] counts customer-free observations of cell i, each contributing
// a zero reward to D[i,i]. Pass an empty span to derive them from the
// windows in which cell i saw no request.
DemandModel estimate_demand(std::span<const TripRecord> trips, std::size_t n_q,
                            std::span<const std::uint64_t> idle_obs,
                            const EstimateOptions& options = {});

// --- synthetic scenarios ----------------------------------------------------

struct FareModel {
  double base = 3.0;
  double per_km = 2.0;
  // Log-normal multiplier with mean one.
  double noise_sd = 0.0;
};

// Request regime: per pair Bernoulli rates per tick, plus a fare scale.
struct DemandRegime {
  std::vector<double> rates;  // row-major n_q x n_q
  double fare_scale = 1.0;
};

struct DriftEvent {
  enum class Kind { kStep, kSinusoid };
  Kind kind = Kind::kStep;
  std::int64_t start_tick = 0;
  // kStep: regime in force from start_tick on.
  DemandRegime regime;
  // kSinusoid: rates from origin i scale by
  // 1 + amplitude * sin(2 pi (t - start) / period + 2 pi i / n_q).
  double period = 1000.0;
  double amplitude = 0.0;
};

struct ScenarioSpec {
  GridGeometry grid;
  DemandRegime initial;
  std::vector<DriftEvent> drift;
  FareModel fare;
  double speed_km_per_tick = 0.5;
  double min_duration = 1.0;
  // Row-major motion factors; empty means all ones.
  std::vector<double> motion;

  std::size_t n_cells() const { return grid.n_cells(); }
  // Throws InputError for infeasible rates in any regime.
  void validate() const;
  // Rate matrix and fare scale in force at a tick.
  DemandRegime regime_at(std::int64_t tick) const;
  // Trip duration and expected fare for a cell pair under a regime.
  double trip_duration(CellId from, CellId to) const;
  double expected_fare(CellId from, CellId to, double fare_scale) const;
};

struct Request {
  std::uint64_t id = 0;
  TripRecord trip;
  Point pickup_point;
  Point dropoff_point;
};

// Deterministic request stream: one Bernoulli draw per cell pair per tick.
class TripGenerator {
 public:
  TripGenerator(ScenarioSpec spec, std::uint64_t seed);

  // Requests for the given tick. Ticks must be requested in increasing
  // order; ids are consecutive across calls.
  std::vector<Request> generate(std::int64_t tick);
  const ScenarioSpec& spec() const { return spec_; }

 private:
  ScenarioSpec spec_;
  std::mt19937_64 rng_;
  std::uint64_t next_id_ = 0;
};

// Analytic demand model of the regime in force at a tick.
DemandModel expected_model(const ScenarioSpec& spec, std::int64_t tick = 0);

struct SyntheticDemand {
  DemandModel model;
  TripGenerator generator;
};

SyntheticDemand synth_demand(const ScenarioSpec& spec, std::uint64_t seed);

}  // namespace fleetrl

#endif  // FLEETRL_DEMAND_HPP_
