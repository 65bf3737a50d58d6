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

#include "doctest.h"
#include "fleetrl/distributed.hpp"

using namespace fleetrl;

namespace {

QTable table(std::size_t n, double fill = 0.0) {
  return QTable(std::make_shared<const ActionIndex>(ActionIndex::dense(n)), fill);
}

SarsaUpdateEvent event(std::uint32_t i, std::uint32_t j, std::optional<std::uint32_t> next,
                       double reward) {
  SarsaUpdateEvent ev;
  ev.state = CellId(i);
  ev.action = CellId(j);
  ev.successor = CellId(j);
  if (next) ev.successor_action = CellId(*next);
  ev.reward = reward;
  return ev;
}

CommGraph complete(std::size_t n) {
  return graph_from_weights(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n),
                                                      static_cast<Eigen::Index>(n),
                                                      1.0 / static_cast<double>(n)));
}

}  // namespace

TEST_CASE("correction: idle, worked value and gradient identity") {
  auto q = table(3);
  q.at(CellId(0), CellId(1)) = 3.0;
  q.at(CellId(1), CellId(2)) = 4.0;
  const auto agent = AgentLearnState::warm_start(q);
  const auto idle = local_correction(agent, std::nullopt, 0.5);
  CHECK(idle.r == 0.0);
  CHECK_FALSE(idle.pair.has_value());

  const auto ev = event(0, 1, 2, 1.0);
  const auto c = local_correction(agent, ev, 0.5);
  CHECK(c.r == 0.0);
  CHECK(c.pair == q.index().at(CellId(0), CellId(1)));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int k = 0; k < 50; ++k) {
    auto qq = table(3);
    for (auto& v : qq.values()) v = u(rng);
    const auto a = AgentLearnState::warm_start(qq);
    const auto e = event(2, 0, std::nullopt, u(rng));
    CHECK(local_correction(a, e, 0.8).r == -loss_gradient(qq, e, 0.8));
  }
}

TEST_CASE("warm start initial values") {
  const auto q = table(2, 7.0);
  const auto a = AgentLearnState::warm_start(q, 0.3);
  CHECK(a.q_hat == q);
  for (double w : a.omega) CHECK(w == 0.0);
  for (double f : a.rates.f) CHECK(f == 1.0);
  for (double g : a.rates.g) CHECK(g == 1.0);
  CHECK(a.rates.zeta == 0.3);
}

TEST_CASE("one agent reproduces centralized SARSA exactly") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::uint32_t> cell(0, 3);
  std::uniform_real_distribution<double> reward(0.0, 20.0);
  const auto q0 = table(4, 5.0);
  QTable q = q0;
  auto rs = AdaptiveRateState::init(q.size());
  std::vector<AgentLearnState> agents{AgentLearnState::warm_start(q0)};
  const auto g = complete(1);
  for (int t = 0; t < 5000; ++t) {
    std::optional<SarsaUpdateEvent> ev;
    if (rng() % 3 != 0) {
      const auto j = cell(rng);
      ev = event(cell(rng), j, rng() % 4 ? std::optional<std::uint32_t>(cell(rng)) : std::nullopt,
                 reward(rng));
    }
    if (ev) {
      const auto step = sarsa_step(q, rs, *ev, 0.8);
      const auto tick = fleet_learn_tick(agents, g, std::span(&ev, 1), 0.8);
      REQUIRE(tick.records.size() == 1);
      CHECK(tick.records[0].alpha == step.alpha);
    } else {
      fleet_learn_tick(agents, g, std::span(&ev, 1), 0.8);
    }
    REQUIRE(agents[0].q_hat.values().size() == q.values().size());
    for (std::size_t k = 0; k < q.size(); ++k) REQUIRE(agents[0].q_hat[k] == q[k]);
  }
  CHECK(agents[0].rates.f == rs.f);
  CHECK(agents[0].rates.g == rs.g);
}

TEST_CASE("idle agents with equal states stay put") {
  const auto q = table(3, 2.0);
  std::vector<AgentLearnState> agents(4, AgentLearnState::warm_start(q));
  const std::vector<std::optional<SarsaUpdateEvent>> none(4);
  const std::vector<Point> p{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  const auto tick = fleet_learn_tick(agents, build_graph(p, 1.0), none, 0.8);
  CHECK(tick.records.empty());
  for (const auto& a : agents) {
    CHECK(a.q_hat == q);
    for (double w : a.omega) CHECK(w == 0.0);
  }
}

TEST_CASE("three agents: one observation shifts the average by alpha r") {
  const auto q = table(2);
  // zeta near one sets f = g_t and g = g_t^2 at the first update, so alpha = 1.
  std::vector<AgentLearnState> agents(3, AgentLearnState::warm_start(q, 1.0 - 1e-12));
  std::vector<std::optional<SarsaUpdateEvent>> events(3);
  events[1] = event(0, 1, 1, 1.0);
  const auto tick = fleet_learn_tick(agents, complete(3), events, 0.5);
  REQUIRE(tick.records.size() == 1);
  CHECK(tick.records[0].r == 1.0);
  CHECK(tick.records[0].alpha == doctest::Approx(1.0));
  const std::size_t p = q.index().at(CellId(0), CellId(1));
  const double avg = (agents[0].q_hat[p] + agents[1].q_hat[p] + agents[2].q_hat[p]) / 3.0;
  CHECK(avg == doctest::Approx(tick.records[0].alpha * 1.0).epsilon(1e-14));
  CHECK(avg == doctest::Approx(1.0));
  // Inputs land after mixing; one idle round on the complete graph spreads them.
  CHECK(agents[1].q_hat[p] == doctest::Approx(3.0));
  const std::vector<std::optional<SarsaUpdateEvent>> none(3);
  fleet_learn_tick(agents, complete(3), none, 0.5);
  CHECK(disagreement(agents) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("disagreement examples") {
  const auto q = table(2);
  std::vector<AgentLearnState> agents(3, AgentLearnState::warm_start(q));
  CHECK(disagreement(agents) == 0.0);
  agents[2].q_hat[1] += 0.5;
  CHECK(disagreement(agents) == 0.5);
  agents[0].q_hat[3] -= 0.25;
  CHECK(disagreement(agents) == 0.5);
}

TEST_CASE("average tracking identity and alpha range on random graphs") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::uint32_t> cell(0, 2);
  std::uniform_real_distribution<double> u(0.0, 4.0);
  std::uniform_real_distribution<double> reward(0.0, 30.0);
  const std::size_t n = 5;
  auto q0 = table(3);
  for (auto& v : q0.values()) v = reward(rng);
  std::vector<AgentLearnState> agents(n, AgentLearnState::warm_start(q0));
  std::vector<double> cumulative(q0.size(), 0.0);
  for (int t = 0; t < 10000; ++t) {
    std::vector<Point> pos(n);
    for (auto& p : pos) p = {u(rng), u(rng)};
    std::vector<std::optional<SarsaUpdateEvent>> events(n);
    for (auto& e : events) {
      if (rng() % 4 == 0) {
        const auto j = cell(rng);
        e = event(cell(rng), j, cell(rng), reward(rng));
      }
    }
    const auto tick = fleet_learn_tick(agents, build_graph(pos, 2.0), events, 0.8);
    for (const auto& in : tick.q_inputs) cumulative[in.index] += in.value;
    for (const auto& rec : tick.records) {
      CHECK(rec.alpha >= 0.0);
      CHECK(rec.alpha <= 1.0);
    }
  }
  const auto mean = mean_estimate(agents);
  for (std::size_t k = 0; k < q0.size(); ++k) {
    CHECK(std::abs(mean[k] - (q0[k] + cumulative[k] / n)) <= 1e-8);
  }
}

TEST_CASE("fleet tick validates its inputs") {
  const auto q = table(2);
  std::vector<AgentLearnState> agents(2, AgentLearnState::warm_start(q));
  std::vector<std::optional<SarsaUpdateEvent>> one(1);
  CHECK_THROWS_AS(fleet_learn_tick(agents, complete(2), one, 0.5), InputError);
  std::vector<std::optional<SarsaUpdateEvent>> bad(2);
  bad[0] = event(0, 5, 1, 1.0);
  CHECK_THROWS_AS(fleet_learn_tick(agents, complete(2), bad, 0.5), IndexError);
}
