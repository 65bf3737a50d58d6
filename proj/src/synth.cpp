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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "fleetrl/demand.hpp"

namespace fleetrl {

namespace {

void check_regime(const DemandRegime& regime, std::size_t n_q, double peak,
                  const std::string& label) {
  if (regime.rates.size() != n_q * n_q) {
    throw InputError(fmt::format("{}: rate matrix must be {}x{}", label, n_q, n_q));
  }
  if (!(regime.fare_scale >= 0.0)) {
    throw InputError(fmt::format("{}: fare_scale must be nonnegative", label));
  }
  for (std::size_t i = 0; i < n_q; ++i) {
    double mass = 0.0;
    for (std::size_t j = 0; j < n_q; ++j) {
      const double r = regime.rates[i * n_q + j];
      if (!(r >= 0.0) || r * peak > 1.0) {
        throw InputError(fmt::format("{}: rate[{},{}] = {} is not a probability at peak {}",
                                     label, i, j, r, peak));
      }
      if (j != i) mass += r;
    }
    if (mass * peak > 1.0 + 1e-12) {
      throw InputError(fmt::format(
          "{}: cell {} has request mass {} above 1 + L[i,i]", label, i, mass * peak));
    }
  }
}

}  // namespace

void ScenarioSpec::validate() const {
  const std::size_t n_q = n_cells();
  if (n_q < 2) throw InputError("scenario needs at least 2 cells");
  if (!(speed_km_per_tick > 0.0)) throw InputError("speed_km_per_tick must be positive");
  if (!(min_duration > 0.0)) throw InputError("min_duration must be positive");
  if (!motion.empty()) {
    if (motion.size() != n_q * n_q) throw InputError("motion matrix must be n_q x n_q");
    for (double m : motion) {
      if (!(m > 0.0)) throw InputError("motion factors must be positive");
    }
  }
  if (fare.base < 0.0 || fare.per_km < 0.0 || fare.noise_sd < 0.0) {
    throw InputError("fare parameters must be nonnegative");
  }
  double peak = 1.0;
  for (const auto& e : drift) {
    if (e.kind == DriftEvent::Kind::kSinusoid) {
      if (!(e.period > 0.0)) throw InputError("sinusoid period must be positive");
      peak *= 1.0 + std::abs(e.amplitude);
    }
  }
  check_regime(initial, n_q, peak, "initial regime");
  for (std::size_t k = 0; k < drift.size(); ++k) {
    if (drift[k].kind == DriftEvent::Kind::kStep) {
      check_regime(drift[k].regime, n_q, peak, fmt::format("drift event {}", k));
    }
  }
}

DemandRegime ScenarioSpec::regime_at(std::int64_t tick) const {
  const DemandRegime* active = &initial;
  std::int64_t active_start = std::numeric_limits<std::int64_t>::min();
  for (const auto& e : drift) {
    if (e.kind == DriftEvent::Kind::kStep && e.start_tick <= tick &&
        e.start_tick >= active_start) {
      active = &e.regime;
      active_start = e.start_tick;
    }
  }
  DemandRegime out = *active;
  const std::size_t n_q = n_cells();
  for (const auto& e : drift) {
    if (e.kind != DriftEvent::Kind::kSinusoid || e.start_tick > tick) continue;
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(tick - e.start_tick) / e.period;
    for (std::size_t i = 0; i < n_q; ++i) {
      const double scale =
          1.0 + e.amplitude * std::sin(phase + 2.0 * std::numbers::pi * static_cast<double>(i) /
                                                    static_cast<double>(n_q));
      for (std::size_t j = 0; j < n_q; ++j) out.rates[i * n_q + j] *= scale;
    }
  }
  return out;
}

double ScenarioSpec::trip_duration(CellId from, CellId to) const {
  const double d = distance(grid.centroid(from), grid.centroid(to));
  return std::max(min_duration, d / speed_km_per_tick);
}

double ScenarioSpec::expected_fare(CellId from, CellId to, double fare_scale) const {
  const double d = distance(grid.centroid(from), grid.centroid(to));
  return (fare.base + fare.per_km * d) * fare_scale;
}

TripGenerator::TripGenerator(ScenarioSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), rng_(seed) {
  spec_.validate();
}

std::vector<Request> TripGenerator::generate(std::int64_t tick) {
  const std::size_t n_q = spec_.n_cells();
  const DemandRegime regime = spec_.regime_at(tick);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  const double sd = spec_.fare.noise_sd;
  std::vector<Request> out;
  for (std::size_t i = 0; i < n_q; ++i) {
    for (std::size_t j = 0; j < n_q; ++j) {
      if (u(rng_) >= regime.rates[i * n_q + j]) continue;
      const CellId from(static_cast<std::uint32_t>(i));
      const CellId to(static_cast<std::uint32_t>(j));
      Request r;
      r.id = next_id_++;
      r.pickup_point = spec_.grid.sample_in_cell(from, rng_);
      r.dropoff_point = spec_.grid.sample_in_cell(to, rng_);
      double multiplier = 1.0;
      if (sd > 0.0) multiplier = std::exp(sd * z(rng_) - 0.5 * sd * sd);
      r.trip.pickup = from;
      r.trip.dropoff = to;
      r.trip.start_time = tick;
      r.trip.duration = spec_.trip_duration(from, to);
      r.trip.fare = spec_.expected_fare(from, to, regime.fare_scale) * multiplier;
      out.push_back(r);
    }
  }
  return out;
}

DemandModel expected_model(const ScenarioSpec& spec, std::int64_t tick) {
  spec.validate();
  const std::size_t n_q = spec.n_cells();
  const DemandRegime regime = spec.regime_at(tick);
  DemandModel model(n_q);
  for (std::size_t i = 0; i < n_q; ++i) {
    const CellId from(static_cast<std::uint32_t>(i));
    double p_idle = 1.0;
    for (std::size_t j = 0; j < n_q; ++j) p_idle *= 1.0 - regime.rates[i * n_q + j];
    for (std::size_t j = 0; j < n_q; ++j) {
      const CellId to(static_cast<std::uint32_t>(j));
      const double m = spec.motion.empty() ? 1.0 : spec.motion[i * n_q + j];
      const double l = regime.rates[i * n_q + j];
      model.set_motion(from, to, m);
      model.set_probability(from, to, l);
      double reward = m * spec.expected_fare(from, to, regime.fare_scale) /
                      spec.trip_duration(from, to);
      if (i == j) {
        // Pooled with the zero rewards of customer-free windows.
        const double denom = l + p_idle;
        reward = denom > 0.0 ? l * reward / denom : 0.0;
      }
      model.set_reward(from, to, reward);
    }
  }
  return model;
}

SyntheticDemand synth_demand(const ScenarioSpec& spec, std::uint64_t seed) {
  return SyntheticDemand{expected_model(spec, 0), TripGenerator(spec, seed)};
}

}  // namespace fleetrl
