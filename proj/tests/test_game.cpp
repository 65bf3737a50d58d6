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


#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fleetrl/game.hpp"
#include "oracles.hpp"

using namespace fleetrl;

namespace {

Task task_at(std::uint64_t id, Point pickup, Point dropoff, double fare = 10.0) {
  Task t;
  t.id = id;
  t.pickup_point = pickup;
  t.dropoff_point = dropoff;
  t.fare = fare;
  return t;
}

// Fixed per-task values; a pooled pair is worth the sum.
ValueFn fixed_values(const std::vector<Task>& tasks) {
  return [tasks](std::size_t, const GameAction& a) {
    double v = tasks[a.first].fare;
    if (a.kind == GameAction::Kind::kPooled) v += tasks[a.second].fare;
    return v;
  };
}

}  // namespace

TEST_CASE("available set: counts and the strict radius") {
  GameConfig cfg;
  cfg.r_c = 1.0;
  const Point me{0, 0};
  CHECK(available_tasks(me, {}, cfg, true).size() == 1);

  const std::vector<Task> three{task_at(1, {0.1, 0}, {2, 2}), task_at(2, {0, 0.5}, {1, 1}),
                                task_at(3, {-0.5, -0.5}, {0, 3}), task_at(4, {3, 3}, {0, 0})};
  const auto pooled = available_tasks(me, three, cfg, true);
  CHECK(pooled.size() == 7);
  CHECK(pooled.front().is_null());
  CHECK(available_tasks(me, three, cfg, false).size() == 4);

  const std::vector<Task> edge{task_at(1, {1.0, 0}, {2, 2})};
  CHECK(available_tasks(me, edge, cfg, false).size() == 1);
}

TEST_CASE("task value: null, at pickup, identical pooled tasks") {
  const GridGeometry grid(2, 2, 1.0);
  DemandModel dm(4);
  dm.set_reward(CellId(0), CellId(3), 4.0);
  QTable q(std::make_shared<const ActionIndex>(ActionIndex::dense(4)), 0.0);
  q.at(CellId(0), CellId(3)) = 11.0;
  q.at(CellId(0), CellId(3)) = 11.0;
  GameConfig cfg;
  cfg.C = 50.0;
  const std::vector<Task> tasks{
      [] {
        auto t = task_at(1, {0.5, 0.5}, {1.5, 1.5});
        t.pickup_cell = CellId(0);
        t.dropoff_cell = CellId(3);
        return t;
      }(),
      [] {
        auto t = task_at(2, {0.5, 0.5}, {1.5, 1.5});
        t.pickup_cell = CellId(0);
        t.dropoff_cell = CellId(3);
        return t;
      }()};
  const Point at_pickup{0.5, 0.5};
  CHECK(task_value(at_pickup, GameAction::null(), tasks, q, dm, grid, cfg) == 0.0);
  CHECK(task_value(at_pickup, GameAction::single(0), tasks, q, dm, grid, cfg) == 15.0);
  CHECK(task_value({0.5, 1.0}, GameAction::single(0), tasks, q, dm, grid, cfg) ==
        doctest::Approx(15.0 - 50.0 * 0.5));

  const auto route = pooling_route(at_pickup, tasks[0], tasks[1]);
  CHECK(route.path_min == doctest::Approx(tasks[0].direct_length()));
  CHECK(route.beta == doctest::Approx(0.0));
  // exp(0) [Q(0 -> 3) + R + R' - 0].
  CHECK(task_value(at_pickup, GameAction::pooled(0, 1), tasks, q, dm, grid, cfg) ==
        doctest::Approx(11.0 + 4.0 + 4.0));
}

TEST_CASE("pooling route: four legs and degenerate trips") {
  const Task a = task_at(1, {0, 0}, {4, 0});
  const Task b = task_at(2, {1, 0}, {2, 0});
  const auto r = pooling_route({-1, 0}, a, b);
  CHECK(r.p1 == 0);
  CHECK(r.p2 == 1);
  CHECK(r.d1 == 1);
  CHECK(r.d2 == 0);
  CHECK(r.path_min == doctest::Approx(1 + 1 + 1 + 2));
  CHECK(r.beta == doctest::Approx(5.0 / 1.0 - 1.0));
  const Task z = task_at(3, {1, 1}, {1, 1});
  CHECK(std::isinf(pooling_route({0, 0}, a, z).beta));
}

TEST_CASE("baseline utilities") {
  GameConfig cfg;
  cfg.r_c = 3.0;
  const std::vector<Task> tasks{task_at(1, {1, 0}, {5, 0}, 5.0), task_at(2, {0, 1.5}, {0, 5}, 9.0),
                                task_at(3, {2, 0}, {5, 5}, 8.0)};
  const Point me{0, 0};
  CHECK(greedy_value(me, GameAction::single(1), tasks, cfg) == 9.0);
  CHECK(shortest_path_value(me, GameAction::single(0), tasks, cfg) == doctest::Approx(2.0));
  CHECK(shortest_path_value(me, GameAction::single(2), tasks, cfg) == doctest::Approx(1.0));
  CHECK(greedy_value(me, GameAction::null(), tasks, cfg) == 0.0);
  CHECK(shortest_path_value(me, GameAction::null(), tasks, cfg) == 0.0);

  // A single agent picks the argmax under either utility.
  for (int kind = 0; kind < 2; ++kind) {
    Game game({me}, tasks, cfg, [&](std::size_t, const GameAction& a) {
      return kind == 0 ? greedy_value(me, a, tasks, cfg) : shortest_path_value(me, a, tasks, cfg);
    });
    std::size_t best = 0;
    for (std::size_t k = 1; k < game.actions(0).size(); ++k) {
      if (game.value(0, k) > game.value(0, best)) best = k;
    }
    std::mt19937_64 rng(3);
    const auto res = run_assignment(game, 0.01, rng, {.window = 200});
    CHECK(res.profile[0] == best);
    if (kind == 0) CHECK(game.actions(0)[best] == GameAction::single(1));
    if (kind == 1) CHECK(game.actions(0)[best] == GameAction::single(0));
  }
}

TEST_CASE("wlu: null, single agent, conflicts") {
  GameConfig cfg;
  cfg.r_c = 2.0;
  cfg.r_comm = 4.0;
  const std::vector<Task> tasks{task_at(1, {0, 0}, {1, 1}, 7.0), task_at(2, {1, 0}, {1, 1}, 3.0)};
  Game solo({{0, 0.5}}, tasks, cfg, fixed_values(tasks));
  CHECK(solo.wlu(solo.null_profile(), 0, 0) == 0.0);
  CHECK(solo.wlu(solo.null_profile(), 0, 1) == 7.0);

  // Agent 0 is closer to task 0's pickup than agent 1.
  Game duo({{0, 0.2}, {0, 0.9}}, tasks, cfg, fixed_values(tasks));
  Profile u{1, 1};
  CHECK(duo.potential(u) == 7.0);
  CHECK(duo.wlu(u, 1, 1) == 0.0);
  CHECK(duo.wlu(u, 0, 1) == 0.0);  // without agent 0, agent 1 collects the 7
  CHECK(duo.wlu(u, 1, 2) == 3.0);
  CHECK_FALSE(duo.conflict_free(u));
  const auto r = duo.resolve(u);
  CHECK(r == Profile{1, 0});
  CHECK(duo.potential(r) == duo.potential(u));
  CHECK(oracle::potential(duo, u) == duo.potential(u));

  // Equal distance: the lower id wins.
  Game tie({{-0.5, 0}, {0.5, 0}}, tasks, cfg, fixed_values(tasks));
  CHECK(tie.resolve(Profile{1, 1}) == Profile{1, 0});
}

TEST_CASE("switch probabilities") {
  CHECK(switch_probability(3.0, 3.0, 0.5) == 0.5);
  CHECK(1.0 - switch_probability(1.0, 0.0, 0.5) == doctest::Approx(0.8808).epsilon(1e-4));
  CHECK(1.0 - switch_probability(1.0, 0.0, 0.5) ==
        doctest::Approx(std::exp(2.0) / (std::exp(2.0) + 1.0)));
  CHECK(switch_probability(0.0, 1.0, 1e-4) == 1.0);
  CHECK(switch_probability(1e6, -1e6, 0.5) == 0.0);
  for (double d : {-3.0, -0.1, 0.0, 0.7, 9.0}) {
    CHECK(switch_probability(d, 0.0, 0.5) + switch_probability(0.0, d, 0.5) ==
          doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(switch_probability(0, 0, 0), DomainError);
}

TEST_CASE("potential identity holds on fuzzed instances") {
  std::mt19937_64 rng(77);
  for (int k = 0; k < 200; ++k) {
    const auto rg = oracle::random_game(rng, 1 + k % 5, k % 7, k % 2 == 0);
    const Game game = rg.game();
    Profile u(game.n_agents());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng() % game.actions(i).size();
    CHECK(game.potential(u) == doctest::Approx(oracle::potential(game, u)));
    for (std::size_t i = 0; i < u.size(); ++i) {
      const auto a = rng() % game.actions(i).size();
      const auto b = rng() % game.actions(i).size();
      CHECK(potential_identity_check(game, u, i, a, b));
      CHECK(potential_identity_check(game, u, i, a, a));
      CHECK(game.wlu(u, i, 0) == 0.0);
    }
  }
}

TEST_CASE("bll changes at most one agent per round") {
  std::mt19937_64 rng(8);
  const auto rg = oracle::random_game(rng, 4, 5, true);
  const Game game = rg.game();
  Profile u = game.null_profile();
  for (int k = 0; k < 2000; ++k) {
    const Profile before = u;
    const auto step = bll_round(game, u, rng, 0.5);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < u.size(); ++i) changed += u[i] != before[i];
    CHECK(changed == (step.switched ? 1u : 0u));
    if (step.switched) CHECK(u[step.agent] == step.trial);
  }
}

TEST_CASE("wlu depends only on nearby agents") {
  std::mt19937_64 rng(19);
  for (int k = 0; k < 100; ++k) {
    const bool pooling = k % 2 == 1;
    auto rg = oracle::random_game(rng, 3, 5, pooling, 0.7);
    // Far agents sit around a copy of the tasks 50 km away.
    const std::size_t near = rg.agents.size();
    const std::size_t n_tasks = rg.tasks.size();
    for (std::size_t t = 0; t < n_tasks; ++t) {
      auto copy = rg.tasks[t];
      copy.pickup_point.x += 50;
      copy.dropoff_point.x += 50;
      copy.id += 1000;
      rg.tasks.push_back(copy);
    }
    for (std::size_t i = 0; i < near; ++i) rg.agents.push_back({rg.agents[i].x + 50, rg.agents[i].y});
    // task_value needs in-map positions; the values are fixed numbers.
    Game game(rg.agents, rg.tasks, rg.cfg, [](std::size_t i, const GameAction& a) {
      return 1.0 + static_cast<double>(i) + 0.5 * static_cast<double>(a.first + a.second);
    });
    Profile u(game.n_agents());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng() % game.actions(i).size();
    const std::size_t agent = rng() % near;
    std::vector<double> base;
    for (std::size_t a = 0; a < game.actions(agent).size(); ++a) base.push_back(game.wlu(u, agent, a));
    for (int rep = 0; rep < 5; ++rep) {
      Profile v = u;
      for (std::size_t i = near; i < v.size(); ++i) v[i] = rng() % game.actions(i).size();
      for (std::size_t a = 0; a < base.size(); ++a) CHECK(game.wlu(v, agent, a) == base[a]);
    }
  }
}

TEST_CASE("assignment: one agent, one task, stationary distribution") {
  GameConfig cfg;
  const std::vector<Task> tasks{task_at(1, {0, 0}, {1, 1}, 7.0)};
  Game game({{0, 0.5}}, tasks, cfg, fixed_values(tasks));
  int assigned = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    std::mt19937_64 rng(s);
    assigned += run_assignment(game, 0.5, rng, {.window = 60}).profile[0] == 1;
  }
  CHECK(assigned == 200);

  // Long-run fraction of rounds holding a task of value h: e^{h/t} / (1 + e^{h/t}).
  const std::vector<Task> weak{task_at(1, {0, 0}, {1, 1}, 0.5)};
  Game g2({{0, 0.5}}, weak, cfg, fixed_values(weak));
  std::mt19937_64 rng(5);
  Profile u = g2.null_profile();
  const int rounds = 200000;
  int held = 0;
  for (int k = 0; k < rounds; ++k) {
    bll_round(g2, u, rng, 0.5);
    held += u[0] == 1;
  }
  const double expect = std::exp(1.0) / (1.0 + std::exp(1.0));
  CHECK(std::abs(held / static_cast<double>(rounds) - expect) < 0.01);
}

TEST_CASE("assignment: no tasks converges in 3N rounds") {
  GameConfig cfg;
  Game game({{0, 0}, {1, 1}}, {}, cfg, fixed_values({}));
  std::mt19937_64 rng(1);
  const auto res = run_assignment(game, 0.5, rng);
  CHECK(res.converged);
  CHECK(res.rounds == 6);
  CHECK(res.profile == Profile{0, 0});
  CHECK(res.potential_trace.size() == 6);
}

TEST_CASE("assignment: exhausted round budget returns the best profile") {
  std::mt19937_64 rng(4);
  const auto rg = oracle::random_game(rng, 4, 6, false);
  const Game game = rg.game();
  const auto res = run_assignment(game, 50.0, rng, {.window = 100000, .max_rounds = 300});
  CHECK_FALSE(res.converged);
  CHECK(res.rounds == 300);
  CHECK(game.conflict_free(res.profile));
  double best = 0.0;
  for (double p : res.potential_trace) best = std::max(best, p);
  CHECK(res.potential == doctest::Approx(best));
}

TEST_CASE("brute force agrees with the enumeration oracle") {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 30; ++k) {
    const auto rg = oracle::random_game(rng, 3, 4, k % 2 == 0);
    const Game game = rg.game();
    const auto best = max_potential(game);
    CHECK(game.conflict_free(best.profile));
    CHECK(best.potential == doctest::Approx(std::max(0.0, oracle::max_conflict_free_potential(game))));
  }
}

TEST_CASE("instance and trace serialization") {
  std::mt19937_64 rng(2);
  const auto rg = oracle::random_game(rng, 3, 4, true);
  GameInstance inst{rg.cfg, rg.agents, rg.tasks};
  const auto text = serialize_instance(inst);
  const auto back = parse_instance(text);
  CHECK(back.agents == inst.agents);
  CHECK(back.tasks == inst.tasks);
  CHECK(serialize_instance(back) == text);
  CHECK_THROWS_AS(parse_instance("{}"), InputError);

  std::ostringstream out;
  const std::vector<double> trace{0.0, 1.5};
  write_potential_trace(out, trace);
  CHECK(out.str() == "round,potential\n1,0\n2,1.5\n");
}

TEST_CASE("config validation") {
  GameConfig cfg;
  cfg.r_comm = 1.5;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg.r_comm = 2.0;
  cfg.tau = 0.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
}
