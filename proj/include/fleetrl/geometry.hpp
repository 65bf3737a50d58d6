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

#ifndef FLEETRL_GEOMETRY_HPP_
#define FLEETRL_GEOMETRY_HPP_

#include <cstddef>
#include <optional>
#include <random>

#include "fleetrl/types.hpp"

namespace fleetrl {

// Equirectangular lon/lat -> km projection about a reference point. Good to
// well under 1% over a city-sized region.
struct LonLatProjection {
  double ref_lon = 0.0;
  double ref_lat = 0.0;

  Point project(double lon, double lat) const;
};

// Rectangular partition of the map into rows x cols square cells. Cell ids
// are row-major starting at the south-west corner.
class GridGeometry {
 public:
  GridGeometry() = default;
  GridGeometry(std::size_t rows, std::size_t cols, double cell_km,
               Point origin = {});

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t n_cells() const { return rows_ * cols_; }
  double cell_km() const { return cell_km_; }
  Point origin() const { return origin_; }
  double width_km() const { return static_cast<double>(cols_) * cell_km_; }
  double height_km() const { return static_cast<double>(rows_) * cell_km_; }

  Point centroid(CellId cell) const;
  // Cell containing p, or nullopt outside the map. The north and east
  // borders belong to the last row and column.
  std::optional<CellId> cell_of(const Point& p) const;
  bool contains(CellId cell) const { return cell.value() < n_cells(); }

  Point sample_in_cell(CellId cell, std::mt19937_64& rng) const;
  Point sample_on_map(std::mt19937_64& rng) const;

  const std::optional<LonLatProjection>& projection() const {
    return projection_;
  }
  void set_projection(LonLatProjection p) { projection_ = p; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  double cell_km_ = 1.0;
  Point origin_{};
  std::optional<LonLatProjection> projection_;
};

}  // namespace fleetrl

#endif  // FLEETRL_GEOMETRY_HPP_
