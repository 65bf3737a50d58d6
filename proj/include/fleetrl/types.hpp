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

#ifndef FLEETRL_TYPES_HPP_
#define FLEETRL_TYPES_HPP_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fleetrl {

// Index of a city cell in [0, n_q).
struct CellId {
  std::uint32_t index = 0;

  constexpr CellId() = default;
  constexpr explicit CellId(std::uint32_t i) : index(i) {}
  constexpr std::size_t value() const { return index; }

  friend constexpr bool operator==(CellId, CellId) = default;
  friend constexpr auto operator<=>(CellId, CellId) = default;
};

// Planar point, kilometres.
constexpr CellId to_cell(std::size_t i) { return CellId(static_cast<std::uint32_t>(i)); }

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend constexpr bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline Point lerp(const Point& a, const Point& b, double t) {
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
}

// Error hierarchy. InputError marks bad user data (exit code 2 at the CLI);
// everything else derived from Error is an internal failure.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class DomainError : public InputError {
 public:
  using InputError::InputError;
};

// A file could not be opened, read or written.
class IoError : public InputError {
 public:
  using InputError::InputError;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

}  // namespace fleetrl

#endif  // FLEETRL_TYPES_HPP_
