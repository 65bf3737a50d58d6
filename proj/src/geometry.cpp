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

#include "fleetrl/geometry.hpp"

#include <algorithm>
#include <numbers>

namespace fleetrl {

Point LonLatProjection::project(double lon, double lat) const {
  constexpr double kKmPerDegLat = 110.574;
  constexpr double kKmPerDegLonEquator = 111.320;
  const double rad = ref_lat * std::numbers::pi / 180.0;
  return {(lon - ref_lon) * kKmPerDegLonEquator * std::cos(rad),
          (lat - ref_lat) * kKmPerDegLat};
}

GridGeometry::GridGeometry(std::size_t rows, std::size_t cols, double cell_km,
                           Point origin)
    : rows_(rows), cols_(cols), cell_km_(cell_km), origin_(origin) {
  if (rows == 0 || cols == 0) throw InputError("grid needs at least one row and column");
  if (rows * cols < 2) throw InputError("grid needs at least 2 cells");
  if (!(cell_km > 0.0)) throw InputError("cell size must be positive");
}

Point GridGeometry::centroid(CellId cell) const {
  const std::size_t r = cell.value() / cols_;
  const std::size_t c = cell.value() % cols_;
  return {origin_.x + (static_cast<double>(c) + 0.5) * cell_km_,
          origin_.y + (static_cast<double>(r) + 0.5) * cell_km_};
}

std::optional<CellId> GridGeometry::cell_of(const Point& p) const {
  const double fx = (p.x - origin_.x) / cell_km_;
  const double fy = (p.y - origin_.y) / cell_km_;
  if (!(fx >= 0.0) || !(fy >= 0.0)) return std::nullopt;
  if (fx > static_cast<double>(cols_) || fy > static_cast<double>(rows_)) {
    return std::nullopt;
  }
  const auto c = std::min(static_cast<std::size_t>(fx), cols_ - 1);
  const auto r = std::min(static_cast<std::size_t>(fy), rows_ - 1);
  return CellId(static_cast<std::uint32_t>(r * cols_ + c));
}

Point GridGeometry::sample_in_cell(CellId cell, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t r = cell.value() / cols_;
  const std::size_t c = cell.value() % cols_;
  const double x = origin_.x + (static_cast<double>(c) + u(rng)) * cell_km_;
  const double y = origin_.y + (static_cast<double>(r) + u(rng)) * cell_km_;
  return {x, y};
}

Point GridGeometry::sample_on_map(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {origin_.x + u(rng) * width_km(), origin_.y + u(rng) * height_km()};
}

}  // namespace fleetrl
