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

#ifndef FLEETRL_CONSENSUS_HPP_
#define FLEETRL_CONSENSUS_HPP_

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fleetrl/types.hpp"

namespace fleetrl {

// One tick of the communication graph: a nonnegative N x N weight matrix and
// the off-diagonal support of each row.
struct CommGraph {
  Eigen::MatrixXd weights;
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t n_agents() const { return static_cast<std::size_t>(weights.rows()); }
  // Smallest positive off-diagonal weight; 0 when there are no edges.
  double min_edge_weight() const;
  bool doubly_stochastic(double tol = 1e-10) const;
};

// Metropolis weights over the proximity graph ||p_i - p_j|| <= r_comm.
CommGraph build_graph(std::span<const Point> positions, double r_comm);

// Wraps an explicit weight matrix. Throws InputError for non-square or
// negative matrices.
CommGraph graph_from_weights(Eigen::MatrixXd weights);

struct SparseEntry {
  std::size_t index = 0;
  double value = 0.0;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};
// Entries are applied in order; repeated indices accumulate.
using SparseVector = std::vector<SparseEntry>;

// One synchronous round for every agent i:
//   x^i <- x^i + sum_k A_ik (x^k - x^i) + input^i.
// All reads see the pre-round states.
void track_step(std::span<const std::span<double>> states, const CommGraph& graph,
                std::span<const SparseVector> inputs);

struct TrackerState {
  std::vector<std::vector<double>> x;
};

void track_step(TrackerState& ts, const CommGraph& graph, std::span<const SparseVector> inputs);

// Second largest singular value; 0 for a single agent.
double second_singular_value(const Eigen::MatrixXd& weights);

struct ErrorBounds {
  double delta_q = 0.0;
  double delta_omega = 0.0;
  double max_sigma = 0.0;
  // max_sigma reached 1, so no tick sequence mixes; both bounds are infinite.
  bool infinite = false;
};

// Tracking error bounds over a graph sequence for inputs bounded by r_max
// with per-tick changes bounded by dr_max.
ErrorBounds error_bounds(std::span<const CommGraph> graphs, double r_max, double dr_max);
// Same, from a precomputed max second singular value.
ErrorBounds error_bounds_from_sigma(std::size_t n_agents, double max_sigma, double r_max,
                                    double dr_max);

// True iff the union of edges over every window of b consecutive ticks is
// strongly connected. A sequence shorter than b is checked as one window.
bool check_periodic_connectivity(std::span<const CommGraph> graphs, std::size_t b);
bool strongly_connected(const CommGraph& graph);

// Tick-indexed edge list "tick,row,col,weight", diagonal included.
void write_schedule(std::ostream& out, std::span<const CommGraph> graphs);
std::vector<CommGraph> read_schedule(std::istream& in);
std::vector<CommGraph> read_schedule_file(const std::string& path);

}  // namespace fleetrl

#endif  // FLEETRL_CONSENSUS_HPP_
