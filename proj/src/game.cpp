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

#include "fleetrl/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <tuple>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace fleetrl {

GameAction GameAction::pooled(std::size_t a, std::size_t b) {
  if (a == b) throw InputError("a pooled action needs two distinct tasks");
  return {Kind::kPooled, std::min(a, b), std::max(a, b)};
}

void GameConfig::validate() const {
  if (!(r_c > 0.0)) throw DomainError(fmt::format("sensing radius {} must be positive", r_c));
  if (!(r_comm >= 2.0 * r_c)) {
    throw DomainError(fmt::format("R_comm {} must be at least 2 r_c = {}", r_comm, 2.0 * r_c));
  }
  if (!(tau > 0.0)) throw DomainError(fmt::format("temperature {} must be positive", tau));
  if (!(C >= 0.0) || !(C_prime >= 0.0)) throw DomainError("C and C' must be nonnegative");
}

std::vector<GameAction> available_tasks(const Point& position, std::span<const Task> tasks,
                                        const GameConfig& cfg, bool pooling) {
  std::vector<GameAction> out{GameAction::null()};
  std::vector<std::size_t> near;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    if (distance(position, tasks[t].pickup_point) < cfg.r_c) near.push_back(t);
  }
  for (std::size_t t : near) out.push_back(GameAction::single(t));
  if (pooling) {
    for (std::size_t a = 0; a < near.size(); ++a) {
      for (std::size_t b = a + 1; b < near.size(); ++b) {
        out.push_back(GameAction::pooled(near[a], near[b]));
      }
    }
  }
  return out;
}

PoolingRoute pooling_route(const Point& position, const Task& a, const Task& b) {
  const Task* t[2] = {&a, &b};
  PoolingRoute r;
  if (distance(position, b.pickup_point) < distance(position, a.pickup_point)) {
    r.p1 = 1;
    r.p2 = 0;
  }
  const Point& p2 = t[r.p2]->pickup_point;
  if (distance(p2, b.dropoff_point) < distance(p2, a.dropoff_point)) {
    r.d1 = 1;
    r.d2 = 0;
  }
  r.path_min = distance(position, t[r.p1]->pickup_point) +
               distance(t[r.p1]->pickup_point, p2) + distance(p2, t[r.d1]->dropoff_point) +
               distance(t[r.d1]->dropoff_point, t[r.d2]->dropoff_point);
  const double shortest = std::min(a.direct_length(), b.direct_length());
  r.beta = shortest > 0.0 ? r.path_min / shortest - 1.0
                          : std::numeric_limits<double>::infinity();
  return r;
}

double task_value(const Point& position, const GameAction& action, std::span<const Task> tasks,
                  const QTable& q, const DemandModel& demand, const GridGeometry& grid,
                  const GameConfig& cfg) {
  switch (action.kind) {
    case GameAction::Kind::kNull:
      return 0.0;
    case GameAction::Kind::kSingle: {
      const Task& t = tasks[action.first];
      return q.at(t.pickup_cell, t.dropoff_cell) + demand.reward(t.pickup_cell, t.dropoff_cell) -
             cfg.C * distance(position, t.pickup_point);
    }
    case GameAction::Kind::kPooled: {
      const Task* t[2] = {&tasks[action.first], &tasks[action.second]};
      const PoolingRoute route = pooling_route(position, *t[0], *t[1]);
      if (std::isinf(route.beta)) return 0.0;
      const auto here = grid.cell_of(position);
      if (!here) throw InputError("agent position lies outside the map");
      const double inner = q.at(*here, t[route.d2]->dropoff_cell) +
                           demand.reward(t[0]->pickup_cell, t[0]->dropoff_cell) +
                           demand.reward(t[1]->pickup_cell, t[1]->dropoff_cell) -
                           cfg.C * distance(position, t[route.p1]->pickup_point);
      return std::exp(-cfg.C_prime * route.beta) * inner;
    }
  }
  return 0.0;
}

namespace {

double pooled_multiplier(const PoolingRoute& route, double c_prime) {
  return std::isinf(route.beta) ? 0.0 : std::exp(-c_prime * route.beta);
}

}  // namespace

double greedy_value(const Point& position, const GameAction& action, std::span<const Task> tasks,
                    const GameConfig& cfg) {
  switch (action.kind) {
    case GameAction::Kind::kNull:
      return 0.0;
    case GameAction::Kind::kSingle:
      return tasks[action.first].fare;
    case GameAction::Kind::kPooled: {
      const Task& a = tasks[action.first];
      const Task& b = tasks[action.second];
      return pooled_multiplier(pooling_route(position, a, b), cfg.C_prime) * (a.fare + b.fare);
    }
  }
  return 0.0;
}

double shortest_path_value(const Point& position, const GameAction& action,
                           std::span<const Task> tasks, const GameConfig& cfg) {
  switch (action.kind) {
    case GameAction::Kind::kNull:
      return 0.0;
    case GameAction::Kind::kSingle:
      return cfg.r_c - distance(position, tasks[action.first].pickup_point);
    case GameAction::Kind::kPooled: {
      const Task* t[2] = {&tasks[action.first], &tasks[action.second]};
      const PoolingRoute route = pooling_route(position, *t[0], *t[1]);
      return pooled_multiplier(route, cfg.C_prime) * 2.0 *
             (cfg.r_c - distance(position, t[route.p1]->pickup_point));
    }
  }
  return 0.0;
}

// --- game ------------------------------------------------------------------------

Game::Game(std::vector<Point> positions, std::vector<Task> tasks, const GameConfig& cfg,
           const ValueFn& value)
    : positions_(std::move(positions)), tasks_(std::move(tasks)) {
  for (const auto& p : positions_) actions_.push_back(available_tasks(p, tasks_, cfg, cfg.pooling));
  values_.resize(positions_.size());
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    for (const auto& a : actions_[i]) values_[i].push_back(a.is_null() ? 0.0 : value(i, a));
  }
}

Game::Game(std::vector<Point> positions, std::vector<Task> tasks,
           std::vector<std::vector<GameAction>> action_sets, const ValueFn& value)
    : positions_(std::move(positions)), tasks_(std::move(tasks)), actions_(std::move(action_sets)) {
  if (actions_.size() != positions_.size()) throw InputError("one action set per agent required");
  values_.resize(positions_.size());
  for (std::size_t i = 0; i < positions_.size(); ++i) {
    if (actions_[i].empty() || !actions_[i].front().is_null()) {
      throw InputError(fmt::format("agent {}: action set must start with null", i));
    }
    for (const auto& a : actions_[i]) {
      if (a.task_count() > 0 && std::max(a.first, a.kind == GameAction::Kind::kPooled ? a.second : 0) >= tasks_.size()) {
        throw InputError(fmt::format("agent {}: action refers to a missing task", i));
      }
      values_[i].push_back(a.is_null() ? 0.0 : value(i, a));
    }
  }
}

bool Game::wins(const Profile& profile, std::size_t agent, std::size_t action,
                std::size_t override_agent, std::size_t override_action) const {
  const GameAction& mine = actions_[agent][action];
  auto check = [&](std::size_t t) {
    const double my_d = distance(positions_[agent], tasks_[t].pickup_point);
    for (std::size_t j = 0; j < n_agents(); ++j) {
      if (j == agent) continue;
      const std::size_t aj = j == override_agent ? override_action : profile[j];
      if (!actions_[j][aj].holds(t)) continue;
      const double d = distance(positions_[j], tasks_[t].pickup_point);
      if (std::tie(d, j) < std::tie(my_d, agent)) return false;
    }
    return true;
  };
  if (mine.is_null()) return true;
  if (!check(mine.first)) return false;
  return mine.kind != GameAction::Kind::kPooled || check(mine.second);
}

double Game::potential_with(const Profile& profile, std::size_t agent, std::size_t action) const {
  double h = 0.0;
  for (std::size_t i = 0; i < n_agents(); ++i) {
    const std::size_t a = i == agent ? action : profile[i];
    if (a == 0) continue;
    if (wins(profile, i, a, agent, action)) h += values_[i][a];
  }
  return h;
}

double Game::potential(const Profile& profile) const {
  if (profile.size() != n_agents()) throw InputError("profile size differs from agent count");
  return potential_with(profile, n_agents(), 0);
}

double Game::wlu(const Profile& profile, std::size_t agent, std::size_t action) const {
  if (action == 0) return 0.0;
  // Only the agent itself and agents sharing one of its tasks can change
  // contribution between the two profiles.
  const GameAction& mine = actions_[agent][action];
  auto contribution = [&](std::size_t own_action) {
    double h = 0.0;
    for (std::size_t i = 0; i < n_agents(); ++i) {
      const std::size_t a = i == agent ? own_action : profile[i];
      if (a == 0) continue;
      const GameAction& act = actions_[i][a];
      const bool involved = i == agent || act.holds(mine.first) ||
                            (mine.kind == GameAction::Kind::kPooled && act.holds(mine.second));
      if (involved && wins(profile, i, a, agent, own_action)) h += values_[i][a];
    }
    return h;
  };
  return contribution(action) - contribution(0);
}

bool Game::conflict_free(const Profile& profile) const {
  std::vector<char> used(tasks_.size(), 0);
  for (std::size_t i = 0; i < n_agents(); ++i) {
    const GameAction& a = actions_[i][profile[i]];
    for (std::size_t k = 0; k < a.task_count(); ++k) {
      const std::size_t t = k == 0 ? a.first : a.second;
      if (used[t]) return false;
      used[t] = 1;
    }
  }
  return true;
}

Profile Game::resolve(const Profile& profile) const {
  Profile out = profile;
  for (std::size_t i = 0; i < n_agents(); ++i) {
    if (profile[i] != 0 && !wins(profile, i, profile[i], n_agents(), 0)) out[i] = 0;
  }
  return out;
}

double switch_probability(double j_current, double j_trial, double tau) {
  if (!(tau > 0.0)) throw DomainError("temperature must be positive");
  const double x = (j_current - j_trial) / tau;
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

BllStep bll_round(const Game& game, Profile& profile, std::mt19937_64& rng, double tau) {
  BllStep step;
  if (game.n_agents() == 0) return step;
  std::uniform_int_distribution<std::size_t> pick_agent(0, game.n_agents() - 1);
  step.agent = pick_agent(rng);
  std::uniform_int_distribution<std::size_t> pick_action(0, game.actions(step.agent).size() - 1);
  step.trial = pick_action(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  const std::size_t current = profile[step.agent];
  if (step.trial == current) return step;
  const double p = switch_probability(game.wlu(profile, step.agent, current),
                                      game.wlu(profile, step.agent, step.trial), tau);
  if (u < p) {
    profile[step.agent] = step.trial;
    step.switched = true;
  }
  return step;
}

AssignmentResult run_assignment(const Game& game, double tau, std::mt19937_64& rng,
                                const StopRule& stop) {
  const std::size_t n = game.n_agents();
  const std::size_t window = stop.window ? stop.window : 3 * n;
  const std::size_t max_rounds = stop.max_rounds ? stop.max_rounds : 500 * n;
  AssignmentResult result;
  result.profile = game.null_profile();
  double phi = 0.0;
  Profile best = result.profile;
  double best_phi = phi;
  std::size_t unchanged = 0;
  while (result.rounds < max_rounds && unchanged < window) {
    const BllStep step = bll_round(game, result.profile, rng, tau);
    ++result.rounds;
    if (step.switched) {
      unchanged = 0;
      phi = game.potential(result.profile);
      if (phi > best_phi) {
        best_phi = phi;
        best = result.profile;
      }
    } else {
      ++unchanged;
    }
    result.potential_trace.push_back(phi);
  }
  result.converged = unchanged >= window;
  if (!result.converged) result.profile = best;
  result.profile = game.resolve(result.profile);
  result.potential = game.potential(result.profile);
  return result;
}

bool potential_identity_check(const Game& game, const Profile& profile, std::size_t agent,
                              std::size_t action_a, std::size_t action_b, double tol) {
  Profile ua = profile;
  Profile ub = profile;
  ua[agent] = action_a;
  ub[agent] = action_b;
  const double d_phi = game.potential(ub) - game.potential(ua);
  const double d_j = game.wlu(profile, agent, action_b) - game.wlu(profile, agent, action_a);
  return std::abs(d_phi - d_j) <= tol * std::max(1.0, std::abs(d_phi));
}

BruteForceResult max_potential(const Game& game) {
  const std::size_t n = game.n_agents();
  BruteForceResult best{game.null_profile(), 0.0};
  Profile u = game.null_profile();
  while (true) {
    if (game.conflict_free(u)) {
      const double phi = game.potential(u);
      if (phi > best.potential) best = {u, phi};
    }
    std::size_t i = 0;
    for (; i < n; ++i) {
      if (++u[i] < game.actions(i).size()) break;
      u[i] = 0;
    }
    if (i == n) break;
  }
  return best;
}

// --- instance files --------------------------------------------------------------

using nlohmann::json;

std::string serialize_instance(const GameInstance& instance) {
  json doc;
  doc["version"] = 1;
  const auto& c = instance.config;
  doc["config"] = {{"r_c", c.r_c}, {"r_comm", c.r_comm}, {"C", c.C},
                   {"C_prime", c.C_prime}, {"tau", c.tau}, {"pooling", c.pooling}};
  doc["agents"] = json::array();
  for (const auto& p : instance.agents) doc["agents"].push_back({p.x, p.y});
  doc["tasks"] = json::array();
  for (const auto& t : instance.tasks) {
    doc["tasks"].push_back({{"id", t.id},
                            {"pickup", {t.pickup_point.x, t.pickup_point.y}},
                            {"dropoff", {t.dropoff_point.x, t.dropoff_point.y}},
                            {"pickup_cell", t.pickup_cell.value()},
                            {"dropoff_cell", t.dropoff_cell.value()},
                            {"fare", t.fare}});
  }
  return doc.dump(2) + "\n";
}

GameInstance parse_instance(const std::string& text) {
  try {
    const json doc = json::parse(text);
    GameInstance inst;
    if (doc.contains("config")) {
      const json& c = doc.at("config");
      inst.config.r_c = c.value("r_c", inst.config.r_c);
      inst.config.r_comm = c.value("r_comm", inst.config.r_comm);
      inst.config.C = c.value("C", inst.config.C);
      inst.config.C_prime = c.value("C_prime", inst.config.C_prime);
      inst.config.tau = c.value("tau", inst.config.tau);
      inst.config.pooling = c.value("pooling", inst.config.pooling);
    }
    inst.config.validate();
    auto point = [](const json& j) { return Point{j.at(0).get<double>(), j.at(1).get<double>()}; };
    for (const auto& a : doc.at("agents")) inst.agents.push_back(point(a));
    std::uint64_t next_id = 0;
    for (const auto& t : doc.at("tasks")) {
      Task task;
      task.id = t.value("id", next_id);
      next_id = task.id + 1;
      task.pickup_point = point(t.at("pickup"));
      task.dropoff_point = point(t.at("dropoff"));
      task.pickup_cell = to_cell(t.value("pickup_cell", std::size_t{0}));
      task.dropoff_cell = to_cell(t.value("dropoff_cell", std::size_t{0}));
      task.fare = t.value("fare", 0.0);
      inst.tasks.push_back(task);
    }
    return inst;
  } catch (const json::exception& e) {
    throw InputError(fmt::format("malformed game instance: {}", e.what()));
  }
}

void write_potential_trace(std::ostream& out, std::span<const double> trace) {
  out << "round,potential\n";
  for (std::size_t r = 0; r < trace.size(); ++r) out << fmt::format("{},{}\n", r + 1, trace[r]);
}

}  // namespace fleetrl
