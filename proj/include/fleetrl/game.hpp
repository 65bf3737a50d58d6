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

#ifndef FLEETRL_GAME_HPP_
#define FLEETRL_GAME_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fleetrl/demand.hpp"
#include "fleetrl/geometry.hpp"
#include "fleetrl/mdp.hpp"
#include "fleetrl/types.hpp"

namespace fleetrl {

// A pick-up and delivery request.
struct Task {
  std::uint64_t id = 0;
  Point pickup_point;
  Point dropoff_point;
  CellId pickup_cell;
  CellId dropoff_cell;
  double fare = 0.0;

  double direct_length() const { return distance(pickup_point, dropoff_point); }
  friend bool operator==(const Task&, const Task&) = default;
};

// Null, one task, or an unordered pair of tasks served together. Task
// fields index into the game's task list; pooled pairs keep first < second.
struct GameAction {
  enum class Kind { kNull, kSingle, kPooled };
  Kind kind = Kind::kNull;
  std::size_t first = 0;
  std::size_t second = 0;

  static GameAction null() { return {}; }
  static GameAction single(std::size_t t) { return {Kind::kSingle, t, 0}; }
  static GameAction pooled(std::size_t a, std::size_t b);

  bool is_null() const { return kind == Kind::kNull; }
  std::size_t task_count() const {
    return kind == Kind::kNull ? 0 : kind == Kind::kSingle ? 1 : 2;
  }
  bool holds(std::size_t t) const {
    return (kind != Kind::kNull && first == t) || (kind == Kind::kPooled && second == t);
  }
  friend bool operator==(const GameAction&, const GameAction&) = default;
};

struct GameConfig {
  double r_c = 1.0;     // sensing radius, km
  double r_comm = 2.0;  // communication radius, km; at least 2 r_c
  double C = 20.0;      // travel cost per km
  double C_prime = 1.0;
  double tau = 0.5;
  bool pooling = false;

  // Throws DomainError on r_comm < 2 r_c or non-positive radii or tau.
  void validate() const;
};

// Null first, then singletons with ||p - pickup|| < r_c in task order, then
// (with pooling) every unordered pair of those.
std::vector<GameAction> available_tasks(const Point& position, std::span<const Task> tasks,
                                        const GameConfig& cfg, bool pooling);

// Route of a pooled pair from the agent position. p1/p2/d1/d2 index into
// the two tasks {a, b} as 0 or 1.
struct PoolingRoute {
  int p1 = 0, p2 = 1, d1 = 0, d2 = 1;
  double path_min = 0.0;
  // Path_min over the shorter direct trip, minus one; infinite when that
  // trip has zero length.
  double beta = 0.0;
};

PoolingRoute pooling_route(const Point& position, const Task& a, const Task& b);

// Utility h of an action for an agent at position with Q-table q.
//   single:  Q(j, a_l) + D[j,l] - C ||p - pickup||
//   pooled:  exp(-C' beta) [Q(k, a_d2) + D_a + D_b - C ||p - pickup_p1||]
//   null:    0
double task_value(const Point& position, const GameAction& action, std::span<const Task> tasks,
                  const QTable& q, const DemandModel& demand, const GridGeometry& grid,
                  const GameConfig& cfg);

// Baseline utilities. Greedy values a task by its fare and shortest-path by
// r_c minus the distance to the pickup; pooled pairs keep the exp(-C' beta)
// penalty.
double greedy_value(const Point& position, const GameAction& action, std::span<const Task> tasks,
                    const GameConfig& cfg);
double shortest_path_value(const Point& position, const GameAction& action,
                           std::span<const Task> tasks, const GameConfig& cfg);

// Per-agent action profile: index into that agent's available set.
using Profile = std::vector<std::size_t>;

// Utility provider h(agent, action).
using ValueFn = std::function<double(std::size_t agent, const GameAction& action)>;

// A frozen assignment game: positions, tasks, available sets and cached h.
class Game {
 public:
  Game(std::vector<Point> positions, std::vector<Task> tasks, const GameConfig& cfg,
       const ValueFn& value);
  // Explicit action sets; each must start with the null action.
  Game(std::vector<Point> positions, std::vector<Task> tasks,
       std::vector<std::vector<GameAction>> action_sets, const ValueFn& value);

  std::size_t n_agents() const { return positions_.size(); }
  std::span<const Task> tasks() const { return tasks_; }
  const Point& position(std::size_t agent) const { return positions_[agent]; }
  std::span<const GameAction> actions(std::size_t agent) const { return actions_[agent]; }
  double value(std::size_t agent, std::size_t action) const { return values_[agent][action]; }

  Profile null_profile() const { return Profile(n_agents(), 0); }

  // H = sum of h over agents that win every task they hold. A task held by
  // several agents goes to the one closest to its pickup, then lowest id.
  double potential(const Profile& profile) const;
  // H(action, u^-i) - H(null, u^-i).
  double wlu(const Profile& profile, std::size_t agent, std::size_t action) const;

  bool conflict_free(const Profile& profile) const;
  // Sets every agent that loses a conflict to null; H is unchanged.
  Profile resolve(const Profile& profile) const;

 private:
  double potential_with(const Profile& profile, std::size_t agent, std::size_t action) const;
  bool wins(const Profile& profile, std::size_t agent, std::size_t action,
            std::size_t override_agent, std::size_t override_action) const;

  std::vector<Point> positions_;
  std::vector<Task> tasks_;
  std::vector<std::vector<GameAction>> actions_;
  std::vector<std::vector<double>> values_;
};

// Probability of switching from the current action to the trial action.
double switch_probability(double j_current, double j_trial, double tau);

struct BllStep {
  std::size_t agent = 0;
  std::size_t trial = 0;
  bool switched = false;
};

// One binary log-linear learning round: one uniformly drawn agent compares
// its action with a uniformly drawn trial action.
BllStep bll_round(const Game& game, Profile& profile, std::mt19937_64& rng, double tau);

struct StopRule {
  std::size_t window = 0;      // unchanged rounds to stop; 0 means 3N
  std::size_t max_rounds = 0;  // 0 means 500N
};

struct AssignmentResult {
  Profile profile;
  double potential = 0.0;
  std::vector<double> potential_trace;  // after each round
  std::size_t rounds = 0;
  bool converged = false;
};

// Runs bll_round from the all-null profile until the stop rule holds. On
// exhausting max_rounds the best profile seen is returned. Conflicts in the
// returned profile are resolved.
AssignmentResult run_assignment(const Game& game, double tau, std::mt19937_64& rng,
                                const StopRule& stop = {});

// Phi(b, u^-i) - Phi(a, u^-i) == J^i(b, u^-i) - J^i(a, u^-i) within tol.
bool potential_identity_check(const Game& game, const Profile& profile, std::size_t agent,
                              std::size_t action_a, std::size_t action_b, double tol = 1e-9);

struct BruteForceResult {
  Profile profile;
  double potential = 0.0;
};

// Exhaustive maximum of H over conflict-free profiles.
BruteForceResult max_potential(const Game& game);

// --- instance files ------------------------------------------------------------

struct GameInstance {
  GameConfig config;
  std::vector<Point> agents;
  std::vector<Task> tasks;
};

std::string serialize_instance(const GameInstance& instance);
GameInstance parse_instance(const std::string& text);
void write_potential_trace(std::ostream& out, std::span<const double> trace);

}  // namespace fleetrl

#endif  // FLEETRL_GAME_HPP_
