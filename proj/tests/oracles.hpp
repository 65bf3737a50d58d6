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


// Independent reference implementations used by the unit and acceptance
// tests. They share no code with the library beyond its data types.

#ifndef FLEETRL_TESTS_ORACLES_HPP_
#define FLEETRL_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include "fleetrl/demand.hpp"
#include "fleetrl/game.hpp"
#include "fleetrl/mdp.hpp"

namespace oracle {

// A random demand model whose rows all keep a positive stay probability.
inline fleetrl::DemandModel random_demand(std::mt19937_64& rng, std::size_t n_q) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  fleetrl::DemandModel dm(n_q);
  for (std::size_t i = 0; i < n_q; ++i) {
    std::vector<double> w(n_q);
    double total = 0.0;
    for (auto& x : w) total += (x = u(rng));
    const double mass = 0.05 + 0.9 * u(rng);
    for (std::size_t j = 0; j < n_q; ++j) {
      const auto a = fleetrl::to_cell(i), b = fleetrl::to_cell(j);
      dm.set_probability(a, b, i == j ? u(rng) : mass * w[j] / total);
      dm.set_reward(a, b, 20.0 * u(rng));
    }
  }
  return dm;
}

// Plain value iteration on each loop problem, straight from the case
// definitions of P and R: at the loop cell the agent picks its destination,
// elsewhere customers move it.
inline std::vector<double> value_iteration_q(const fleetrl::DemandModel& dm, double gamma,
                                             double tol = 1e-13) {
  const std::size_t n = dm.n_cells();
  auto L = [&](std::size_t i, std::size_t j) {
    return dm.probability(fleetrl::to_cell(i), fleetrl::to_cell(j));
  };
  auto D = [&](std::size_t i, std::size_t j) {
    return dm.reward(fleetrl::to_cell(i), fleetrl::to_cell(j));
  };
  auto stay = [&](std::size_t i) {
    double s = 1.0 + L(i, i);
    for (std::size_t k = 0; k < n; ++k) s -= L(i, k);
    return s;
  };
  auto R = [&](std::size_t i, std::size_t j) {
    return i == j ? L(i, i) * D(i, i) / stay(i) : D(i, j);
  };
  std::vector<double> q;
  for (std::size_t loop = 0; loop < n; ++loop) {
    std::vector<double> v(n, 0.0), next(n);
    for (int it = 0; it < 1000000; ++it) {
      double change = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double best;
        if (i == loop) {
          best = -std::numeric_limits<double>::infinity();
          for (std::size_t j = 0; j < n; ++j) best = std::max(best, R(i, j) + gamma * v[j]);
        } else {
          best = 0.0;
          for (std::size_t k = 0; k < n; ++k) {
            const double p = k == i ? stay(i) : L(i, k);
            best += p * (R(i, k) + gamma * v[k]);
          }
        }
        next[i] = best;
        change = std::max(change, std::abs(best - v[i]));
      }
      v.swap(next);
      if (change < tol) break;
    }
    for (std::size_t j = 0; j < n; ++j) q.push_back(R(loop, j) + gamma * v[j]);
  }
  return q;
}

// Potential of a profile by direct summation of the conflict rule.
inline double potential(const fleetrl::Game& game, const fleetrl::Profile& profile) {
  const std::size_t n = game.n_agents();
  auto tasks = game.tasks();
  double h = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = game.actions(i)[profile[i]];
    if (a.is_null()) continue;
    bool wins_all = true;
    for (std::size_t slot = 0; slot < a.task_count(); ++slot) {
      const std::size_t t = slot == 0 ? a.first : a.second;
      const double mine = fleetrl::distance(game.position(i), tasks[t].pickup_point);
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i || !game.actions(k)[profile[k]].holds(t)) continue;
        const double theirs = fleetrl::distance(game.position(k), tasks[t].pickup_point);
        if (theirs < mine || (theirs == mine && k < i)) wins_all = false;
      }
    }
    if (wins_all) h += game.value(i, profile[i]);
  }
  return h;
}

// Largest potential over every conflict-free profile.
inline double max_conflict_free_potential(const fleetrl::Game& game) {
  const std::size_t n = game.n_agents();
  fleetrl::Profile p(n, 0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<int> used(game.tasks().size(), 0);
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      const auto& a = game.actions(i)[p[i]];
      for (std::size_t slot = 0; slot < a.task_count(); ++slot) {
        const std::size_t t = slot == 0 ? a.first : a.second;
        if (used[t]++) ok = false;
      }
    }
    if (ok) best = std::max(best, potential(game, p));
    std::size_t i = 0;
    while (i < n && ++p[i] == game.actions(i).size()) p[i++] = 0;
    if (i == n) break;
  }
  return best;
}

// A random assignment game on a 3 x 3 km map, valued with task_value over a
// random Q-table and demand model.
struct RandomGame {
  fleetrl::GridGeometry grid{3, 3, 1.0};
  fleetrl::DemandModel demand;
  fleetrl::QTable q;
  fleetrl::GameConfig cfg;
  std::vector<fleetrl::Point> agents;
  std::vector<fleetrl::Task> tasks;

  fleetrl::Game game() const {
    return fleetrl::Game(agents, tasks, cfg, [this](std::size_t i, const fleetrl::GameAction& a) {
      return fleetrl::task_value(agents[i], a, tasks, q, demand, grid, cfg);
    });
  }
};

inline RandomGame random_game(std::mt19937_64& rng, std::size_t n_agents, std::size_t n_tasks,
                              bool pooling, double r_c = 1.5, double C = 2.0) {
  std::uniform_real_distribution<double> pos(0.0, 3.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RandomGame g;
  g.demand = random_demand(rng, 9);
  g.q = fleetrl::QTable(std::make_shared<const fleetrl::ActionIndex>(
      fleetrl::ActionIndex::dense(9)));
  for (auto& v : g.q.values()) v = 30.0 * u(rng);
  g.cfg.r_c = r_c;
  g.cfg.r_comm = 2 * r_c;
  g.cfg.C = C;
  g.cfg.pooling = pooling;
  for (std::size_t i = 0; i < n_agents; ++i) g.agents.push_back({pos(rng), pos(rng)});
  for (std::size_t t = 0; t < n_tasks; ++t) {
    fleetrl::Task task;
    task.id = 100 + t;
    task.pickup_point = {pos(rng), pos(rng)};
    task.dropoff_point = {pos(rng), pos(rng)};
    task.pickup_cell = *g.grid.cell_of(task.pickup_point);
    task.dropoff_cell = *g.grid.cell_of(task.dropoff_point);
    task.fare = 5.0 + 20.0 * u(rng);
    g.tasks.push_back(task);
  }
  return g;
}

}  // namespace oracle

#endif  // FLEETRL_TESTS_ORACLES_HPP_
