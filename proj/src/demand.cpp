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

#include "fleetrl/demand.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <string_view>
#include <tuple>

#include <fmt/format.h>

namespace fleetrl {

DemandModel::DemandModel(std::size_t n_q)
    : n_q_(n_q), l_(n_q * n_q, 0.0), d_(n_q * n_q, 0.0), m_(n_q * n_q, 1.0) {}

double DemandModel::departure_mass(CellId from) const {
  double mass = 0.0;
  for (std::size_t j = 0; j < n_q_; ++j) {
    if (j != from.value()) mass += l_[from.value() * n_q_ + j];
  }
  return mass;
}

void DemandModel::validate() const {
  if (n_q_ < 2) throw InputError("demand model needs at least 2 cells");
  for (std::size_t i = 0; i < n_q_; ++i) {
    for (std::size_t j = 0; j < n_q_; ++j) {
      const std::size_t k = i * n_q_ + j;
      if (!(l_[k] >= 0.0 && l_[k] <= 1.0)) {
        throw InputError(fmt::format("L[{},{}] = {} is not a probability", i, j, l_[k]));
      }
      if (!(d_[k] >= 0.0) || !std::isfinite(d_[k])) {
        throw InputError(fmt::format("D[{},{}] = {} must be finite and nonnegative", i, j, d_[k]));
      }
      if (!(m_[k] > 0.0) || !std::isfinite(m_[k])) {
        throw InputError(fmt::format("M[{},{}] = {} must be positive", i, j, m_[k]));
      }
    }
    if (departure_mass(CellId(static_cast<std::uint32_t>(i))) > 1.0 + 1e-12) {
      throw InputError(fmt::format(
          "cell {}: request probabilities to other cells sum above 1", i));
    }
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' ||
                        s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  T value{};
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

struct Columns {
  std::optional<std::size_t> pickup_cell, dropoff_cell;
  std::optional<std::size_t> pickup_lon, pickup_lat, dropoff_lon, dropoff_lat;
  std::size_t start_time = 0, duration = 0, fare = 0;
  bool by_cell = true;
  std::size_t needed = 0;
};

Columns resolve_columns(const std::vector<std::string_view>& header) {
  std::map<std::string_view, std::size_t> pos;
  for (std::size_t i = 0; i < header.size(); ++i) pos.emplace(header[i], i);
  auto find = [&](std::string_view name) -> std::optional<std::size_t> {
    const auto it = pos.find(name);
    if (it == pos.end()) return std::nullopt;
    return it->second;
  };
  auto require = [&](std::string_view name) {
    const auto p = find(name);
    if (!p) throw IngestError(fmt::format("header lacks column '{}'", name), 1);
    return *p;
  };

  Columns c;
  c.start_time = require("start_time");
  c.duration = require("duration");
  c.fare = require("fare");
  c.pickup_cell = find("pickup_cell");
  c.dropoff_cell = find("dropoff_cell");
  std::size_t widest = std::max({c.start_time, c.duration, c.fare});
  if (c.pickup_cell && c.dropoff_cell) {
    c.by_cell = true;
    widest = std::max({widest, *c.pickup_cell, *c.dropoff_cell});
  } else {
    c.by_cell = false;
    c.pickup_lon = require("pickup_lon");
    c.pickup_lat = require("pickup_lat");
    c.dropoff_lon = require("dropoff_lon");
    c.dropoff_lat = require("dropoff_lat");
    widest = std::max({widest, *c.pickup_lon, *c.pickup_lat, *c.dropoff_lon,
                       *c.dropoff_lat});
  }
  c.needed = widest + 1;
  return c;
}

std::optional<CellId> parse_cell(std::string_view s, const GridGeometry& g) {
  const auto v = parse_number<std::uint32_t>(s);
  if (!v || *v >= g.n_cells()) return std::nullopt;
  return CellId(*v);
}

std::optional<CellId> parse_point_cell(std::string_view lon, std::string_view lat,
                                       const GridGeometry& g) {
  const auto x = parse_number<double>(lon);
  const auto y = parse_number<double>(lat);
  if (!x || !y) return std::nullopt;
  const Point p = g.projection() ? g.projection()->project(*x, *y) : Point{*x, *y};
  return g.cell_of(p);
}

std::optional<TripRecord> parse_row(const std::vector<std::string_view>& f,
                                    const Columns& c, const GridGeometry& g) {
  if (f.size() < c.needed) return std::nullopt;
  TripRecord t;
  std::optional<CellId> pickup, dropoff;
  if (c.by_cell) {
    pickup = parse_cell(f[*c.pickup_cell], g);
    dropoff = parse_cell(f[*c.dropoff_cell], g);
  } else {
    pickup = parse_point_cell(f[*c.pickup_lon], f[*c.pickup_lat], g);
    dropoff = parse_point_cell(f[*c.dropoff_lon], f[*c.dropoff_lat], g);
  }
  if (!pickup || !dropoff) return std::nullopt;
  const auto start = parse_number<std::int64_t>(f[c.start_time]);
  const auto duration = parse_number<double>(f[c.duration]);
  const auto fare = parse_number<double>(f[c.fare]);
  if (!start || !duration || !fare) return std::nullopt;
  if (!(*duration > 0.0) || !std::isfinite(*duration)) return std::nullopt;
  if (!(*fare >= 0.0) || !std::isfinite(*fare)) return std::nullopt;
  t.pickup = *pickup;
  t.dropoff = *dropoff;
  t.start_time = *start;
  t.duration = *duration;
  t.fare = *fare;
  return t;
}

}  // namespace

IngestResult ingest_trips(std::istream& in, const GridGeometry& geometry,
                          char delimiter) {
  IngestResult result;
  std::string line;
  std::size_t row = 0;
  std::optional<Columns> columns;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line, delimiter);
    if (!columns) {
      columns = resolve_columns(fields);
      continue;
    }
    ++result.stats.rows;
    if (auto trip = parse_row(fields, *columns, geometry)) {
      result.trips.push_back(*trip);
      ++result.stats.accepted;
    } else {
      ++result.stats.rejected;
    }
  }
  if (in.bad()) throw IngestError(fmt::format("read failure at row {}", row + 1), row + 1);
  if (!columns) throw IngestError("missing header row", 1);
  result.stats.high_rejection = 2 * result.stats.rejected > result.stats.rows;
  return result;
}

IngestResult ingest_trips_file(const std::filesystem::path& path,
                               const GridGeometry& geometry, char delimiter) {
  std::ifstream in(path);
  if (!in) throw IngestError(fmt::format("cannot open trip file '{}'", path.string()), 0);
  return ingest_trips(in, geometry, delimiter);
}

DemandModel estimate_demand(std::span<const TripRecord> trips, std::size_t n_q,
                            std::span<const std::uint64_t> idle_obs,
                            const EstimateOptions& options) {
  if (n_q < 2) throw InputError("n_q must be at least 2");
  if (options.window_ticks < 1) throw InputError("window_ticks must be >= 1");
  if (!idle_obs.empty() && idle_obs.size() != n_q) {
    throw InputError("idle_obs must have one entry per cell");
  }
  if (!options.motion.empty() && options.motion.size() != n_q * n_q) {
    throw InputError("motion matrix must be n_q x n_q");
  }
  for (const auto& t : trips) {
    if (t.pickup.value() >= n_q || t.dropoff.value() >= n_q) {
      throw InputError(fmt::format("trip references cell outside [0, {})", n_q));
    }
  }

  DemandModel model(n_q);
  for (std::size_t k = 0; k < options.motion.size(); ++k) {
    model.set_motion(CellId(static_cast<std::uint32_t>(k / n_q)),
                     CellId(static_cast<std::uint32_t>(k % n_q)), options.motion[k]);
  }

  // A canonical order makes every floating-point sum independent of the
  // input order.
  std::vector<TripRecord> sorted(trips.begin(), trips.end());
  std::sort(sorted.begin(), sorted.end(), [](const TripRecord& a, const TripRecord& b) {
    return std::tie(a.pickup, a.dropoff, a.start_time, a.duration, a.fare) <
           std::tie(b.pickup, b.dropoff, b.start_time, b.duration, b.fare);
  });

  std::int64_t first = 0;
  std::int64_t n_windows = 0;
  if (!sorted.empty()) {
    auto [lo, hi] = std::minmax_element(
        sorted.begin(), sorted.end(),
        [](const TripRecord& a, const TripRecord& b) { return a.start_time < b.start_time; });
    first = options.first_tick.value_or(lo->start_time);
    n_windows = options.n_windows.value_or((hi->start_time - first) / options.window_ticks + 1);
  } else {
    first = options.first_tick.value_or(0);
    n_windows = options.n_windows.value_or(0);
  }
  if (n_windows < 0) throw InputError("n_windows must be nonnegative");

  const std::size_t pairs = n_q * n_q;
  std::vector<double> reward_sum(pairs, 0.0);
  std::vector<std::uint64_t> reward_count(pairs, 0);
  std::vector<std::pair<std::size_t, std::int64_t>> pair_windows;  // (pair, window)
  std::vector<std::pair<std::size_t, std::int64_t>> cell_windows;  // (cell, window)

  for (const auto& t : sorted) {
    const std::int64_t offset = t.start_time - first;
    if (offset < 0) continue;
    const std::int64_t window = offset / options.window_ticks;
    if (window >= n_windows) continue;
    const std::size_t k = t.pickup.value() * n_q + t.dropoff.value();
    reward_sum[k] += model.motion(t.pickup, t.dropoff) * t.fare / t.duration;
    ++reward_count[k];
    pair_windows.emplace_back(k, window);
    cell_windows.emplace_back(t.pickup.value(), window);
  }
  auto unique_count = [](auto& v, std::size_t buckets) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::vector<std::uint64_t> count(buckets, 0);
    for (const auto& e : v) ++count[e.first];
    return count;
  };
  const auto windows_with_pair = unique_count(pair_windows, pairs);
  const auto windows_with_cell = unique_count(cell_windows, n_q);

  for (std::size_t i = 0; i < n_q; ++i) {
    const CellId from(static_cast<std::uint32_t>(i));
    const std::uint64_t idle =
        idle_obs.empty() ? static_cast<std::uint64_t>(n_windows) - windows_with_cell[i]
                         : idle_obs[i];
    for (std::size_t j = 0; j < n_q; ++j) {
      const CellId to(static_cast<std::uint32_t>(j));
      const std::size_t k = i * n_q + j;
      if (n_windows > 0) {
        model.set_probability(from, to, static_cast<double>(windows_with_pair[k]) /
                                            static_cast<double>(n_windows));
      }
      const std::uint64_t samples = reward_count[k] + (i == j ? idle : 0);
      if (samples > 0) model.set_reward(from, to, reward_sum[k] / static_cast<double>(samples));
    }
    const double mass = model.departure_mass(from);
    if (mass >= 1.0) {
      const double scale = options.max_departure_mass / mass;
      for (std::size_t j = 0; j < n_q; ++j) {
        if (j == i) continue;
        const CellId to(static_cast<std::uint32_t>(j));
        model.set_probability(from, to, model.probability(from, to) * scale);
      }
    }
  }
  return model;
}

}  // namespace fleetrl
