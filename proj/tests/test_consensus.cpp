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
#include "fleetrl/consensus.hpp"

using namespace fleetrl;

namespace {

std::vector<Point> random_layout(std::mt19937_64& rng, std::size_t n, double side) {
  std::uniform_real_distribution<double> u(0.0, side);
  std::vector<Point> p(n);
  for (auto& x : p) x = {u(rng), u(rng)};
  return p;
}

CommGraph star(std::size_t n, std::size_t center, const std::vector<std::size_t>& leaves) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n));
  const double share = 1.0 / (1.0 + static_cast<double>(leaves.size()));
  const auto c = static_cast<Eigen::Index>(center);
  for (auto leaf : leaves) {
    const auto l = static_cast<Eigen::Index>(leaf);
    w(c, l) = w(l, c) = share;
    w(l, l) = 1.0 - share;
  }
  w(c, c) = share;
  return graph_from_weights(w);
}

}  // namespace

TEST_CASE("graph: Metropolis weights for two agents in range") {
  const std::vector<Point> p{{0, 0}, {1, 0}};
  const auto g = build_graph(p, 1.5);
  CHECK(g.weights(0, 0) == 0.5);
  CHECK(g.weights(0, 1) == 0.5);
  CHECK(g.weights(1, 0) == 0.5);
  CHECK(g.weights(1, 1) == 0.5);
  CHECK(g.min_edge_weight() == 0.5);
}

TEST_CASE("graph: out of range is the identity") {
  const std::vector<Point> p{{0, 0}, {5, 0}, {0, 5}};
  const auto g = build_graph(p, 1.0);
  CHECK(g.weights.isApprox(Eigen::MatrixXd::Identity(3, 3)));
  CHECK(g.min_edge_weight() == 0.0);
}

TEST_CASE("graph: edge exactly at the radius is kept") {
  const std::vector<Point> p{{0, 0}, {2, 0}};
  CHECK(build_graph(p, 2.0).weights(0, 1) == 0.5);
}

TEST_CASE("graph: random layouts are symmetric and doubly stochastic") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 50; ++k) {
    const auto g = build_graph(random_layout(rng, 6, 5.0), 2.0);
    CHECK(g.weights.isApprox(g.weights.transpose(), 0.0));
    for (Eigen::Index i = 0; i < 6; ++i) {
      CHECK(std::abs(g.weights.row(i).sum() - 1.0) <= 1e-12);
      CHECK(std::abs(g.weights.col(i).sum() - 1.0) <= 1e-12);
      // Metropolis: A_ij = 1 / (1 + max(deg_i, deg_j)).
      for (Eigen::Index j = 0; j < 6; ++j) {
        if (i == j || g.weights(i, j) == 0.0) continue;
        const double deg = static_cast<double>(
            std::max(g.neighbors[static_cast<std::size_t>(i)].size(),
                     g.neighbors[static_cast<std::size_t>(j)].size()));
        CHECK(g.weights(i, j) == doctest::Approx(1.0 / (1.0 + deg)));
      }
    }
    CHECK(g.doubly_stochastic());
  }
}

TEST_CASE("graph: non-stochastic weights are rejected") {
  Eigen::MatrixXd w(2, 2);
  w << 0.7, 0.5, 0.3, 0.5;
  CHECK_THROWS_AS(graph_from_weights(w), InputError);
}

TEST_CASE("track: fixed point, averaging and conservation") {
  const std::vector<Point> p{{0, 0}, {1, 0}};
  const auto g = build_graph(p, 2.0);

  TrackerState same{{{3.0, 1.0}, {3.0, 1.0}}};
  std::vector<SparseVector> none(2);
  track_step(same, g, none);
  CHECK(same.x[0] == std::vector<double>{3.0, 1.0});
  CHECK(same.x[1] == std::vector<double>{3.0, 1.0});

  TrackerState diff{{{4.0, 0.0}, {2.0, 6.0}}};
  track_step(diff, g, none);
  CHECK(diff.x[0] == std::vector<double>{3.0, 3.0});
  CHECK(diff.x[1] == std::vector<double>{3.0, 3.0});

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = 6, dim = 5;
  TrackerState ts;
  ts.x.assign(n, std::vector<double>(dim));
  for (auto& x : ts.x) {
    for (auto& v : x) v = u(rng);
  }
  std::vector<double> expected(dim, 0.0);
  for (const auto& x : ts.x) {
    for (std::size_t d = 0; d < dim; ++d) expected[d] += x[d];
  }
  for (int t = 0; t < 100000; ++t) {
    const auto graph = build_graph(random_layout(rng, n, 4.0), 2.0);
    std::vector<SparseVector> in(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (u(rng) < 0.0) continue;
      const std::size_t d = static_cast<std::size_t>(rng() % dim);
      const double v = u(rng);
      in[i].push_back({d, v});
      expected[d] += v;
    }
    track_step(ts, graph, in);
  }
  for (std::size_t d = 0; d < dim; ++d) {
    double sum = 0.0;
    for (const auto& x : ts.x) sum += x[d];
    CHECK(std::abs(sum - expected[d]) <= 1e-9);
  }
}

TEST_CASE("track: dimension errors") {
  const std::vector<Point> p{{0, 0}, {1, 0}};
  const auto g = build_graph(p, 2.0);
  TrackerState ts{{{1.0}, {1.0, 2.0}}};
  std::vector<SparseVector> none(2);
  CHECK_THROWS_AS(track_step(ts, g, none), InputError);
  TrackerState ok{{{1.0}, {2.0}}};
  std::vector<SparseVector> bad{{{3, 1.0}}, {}};
  CHECK_THROWS_AS(track_step(ok, g, bad), InputError);
  std::vector<SparseVector> short_inputs(1);
  CHECK_THROWS_AS(track_step(ok, g, short_inputs), InputError);
}

TEST_CASE("bounds: worked examples") {
  const std::vector<Point> p{{0, 0}, {1, 0}};
  const std::vector<CommGraph> complete{build_graph(p, 2.0)};
  const auto b = error_bounds(complete, 1.0, 0.5);
  CHECK(b.max_sigma == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(b.delta_q == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(b.delta_omega == doctest::Approx(std::sqrt(2.0)));
  CHECK_FALSE(b.infinite);
  CHECK(error_bounds(complete, 0.0, 0.0).delta_q == 0.0);

  const std::vector<CommGraph> identity{build_graph(p, 0.5)};
  const auto inf = error_bounds(identity, 1.0, 1.0);
  CHECK(inf.infinite);
  CHECK(std::isinf(inf.delta_q));
}

TEST_CASE("bounds: second singular value") {
  // A ring of four with weights 1/3: eigenvalues 1, 1/3, 1/3, -1/3.
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(4, 4);
  for (int i = 0; i < 4; ++i) {
    w(i, i) = 1.0 / 3;
    w(i, (i + 1) % 4) = 1.0 / 3;
    w(i, (i + 3) % 4) = 1.0 / 3;
  }
  CHECK(second_singular_value(w) == doctest::Approx(1.0 / 3));
  CHECK(second_singular_value(Eigen::MatrixXd::Identity(1, 1)) == 0.0);
}

TEST_CASE("bounds: empirical tracking error stays inside delta_q") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t n = 8;
  const double r_max = 1.0;
  std::vector<CommGraph> graphs;
  for (int t = 0; t < 200; ++t) {
    auto layout = random_layout(rng, n, 3.0);
    auto g = build_graph(layout, 2.5);
    if (strongly_connected(g)) graphs.push_back(g);
  }
  REQUIRE(graphs.size() > 50);
  const auto bound = error_bounds(graphs, r_max, 2 * r_max);
  REQUIRE_FALSE(bound.infinite);
  TrackerState ts;
  ts.x.assign(n, std::vector<double>(1, 0.0));
  double worst = 0.0;
  for (int t = 0; t < 20000; ++t) {
    std::vector<SparseVector> in(n);
    for (auto& v : in) v.push_back({0, r_max * u(rng)});
    track_step(ts, graphs[static_cast<std::size_t>(t) % graphs.size()], in);
    double mean = 0.0;
    for (const auto& x : ts.x) mean += x[0] / n;
    if (t < 100) continue;
    for (const auto& x : ts.x) worst = std::max(worst, std::abs(x[0] - mean));
  }
  CHECK(worst <= bound.delta_q);
}

TEST_CASE("connectivity: static, alternating stars and isolated nodes") {
  const std::vector<Point> p{{0, 0}, {1, 0}, {2, 0}};
  const std::vector<CommGraph> line{build_graph(p, 1.0)};
  CHECK(check_periodic_connectivity(line, 1));

  // Stars around 0 and 3 cover {0,1,2} and {3,1,2}, linked through 1 and 2.
  const std::vector<CommGraph> alt{star(4, 0, {1, 2}), star(4, 3, {1, 2}),
                                   star(4, 0, {1, 2}), star(4, 3, {1, 2})};
  CHECK(check_periodic_connectivity(alt, 2));
  CHECK_FALSE(check_periodic_connectivity(alt, 1));

  const std::vector<Point> q{{0, 0}, {1, 0}, {9, 9}};
  const std::vector<CommGraph> isolated(4, build_graph(q, 2.0));
  for (std::size_t b = 1; b <= 4; ++b) CHECK_FALSE(check_periodic_connectivity(isolated, b));
  CHECK_THROWS_AS(check_periodic_connectivity(line, 0), InputError);
}

TEST_CASE("schedule: write and read round-trip") {
  std::mt19937_64 rng(5);
  std::vector<CommGraph> graphs;
  for (int t = 0; t < 5; ++t) graphs.push_back(build_graph(random_layout(rng, 4, 3.0), 1.5));
  std::stringstream s;
  write_schedule(s, graphs);
  const auto back = read_schedule(s);
  REQUIRE(back.size() == graphs.size());
  for (std::size_t t = 0; t < graphs.size(); ++t) {
    CHECK(back[t].weights.isApprox(graphs[t].weights, 1e-15));
    CHECK(back[t].neighbors == graphs[t].neighbors);
  }
  std::istringstream bad("tick,row,col,weight\n0,0,0,0.5\n");
  CHECK_THROWS_AS(read_schedule(bad), InputError);
  CHECK_THROWS_AS(read_schedule_file("/nonexistent/schedule.csv"), IoError);
}
