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

#ifndef FLEETRL_MDP_HPP_
#define FLEETRL_MDP_HPP_

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fleetrl/demand.hpp"
#include "fleetrl/types.hpp"

namespace fleetrl {

// Bijection between (cell, destination) pairs and flat offsets. Action a^l_j
// ("move to cell j from cell l") is identified by its destination j.
class ActionIndex {
 public:
  // A(l) = every cell, including l itself.
  static ActionIndex dense(std::size_t n_q);
  // Destinations per cell; each list is sorted and deduplicated.
  static ActionIndex from_sets(std::vector<std::vector<CellId>> sets);

  std::size_t n_cells() const { return offsets_.size() - 1; }
  std::size_t size() const { return destinations_.size(); }

  std::span<const CellId> actions(CellId state) const;
  std::size_t begin(CellId state) const { return offsets_[state.value()]; }
  std::size_t end(CellId state) const { return offsets_[state.value() + 1]; }

  std::optional<std::size_t> find(CellId state, CellId destination) const;
  // Throws IndexError for pairs outside the index.
  std::size_t at(CellId state, CellId destination) const;

  CellId state_of(std::size_t offset) const;
  CellId destination_of(std::size_t offset) const { return destinations_.at(offset); }

  friend bool operator==(const ActionIndex&, const ActionIndex&) = default;

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<CellId> destinations_;
  std::vector<std::ptrdiff_t> lookup_;  // n_q x n_q, -1 when absent
};

using ActionIndexPtr = std::shared_ptr<const ActionIndex>;

// Real-valued table over all state-action pairs.
class QTable {
 public:
  QTable() = default;
  explicit QTable(ActionIndexPtr index, double fill = 0.0);

  const ActionIndex& index() const { return *index_; }
  const ActionIndexPtr& index_ptr() const { return index_; }
  std::size_t size() const { return values_.size(); }

  double operator[](std::size_t offset) const { return values_[offset]; }
  double& operator[](std::size_t offset) { return values_[offset]; }
  double at(CellId state, CellId destination) const {
    return values_[index_->at(state, destination)];
  }
  double& at(CellId state, CellId destination) {
    return values_[index_->at(state, destination)];
  }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  // max over A(state); ties go to the smallest destination.
  double best_value(CellId state) const;
  CellId best_action(CellId state) const;

  friend bool operator==(const QTable& a, const QTable& b) {
    return *a.index_ == *b.index_ && a.values_ == b.values_;
  }

 private:
  ActionIndexPtr index_;
  std::vector<double> values_;
};

// Per cell, A(l) sorted by descending Q; ties by smallest destination.
struct RankedPolicy {
  std::vector<std::vector<CellId>> ranked;

  const std::vector<CellId>& at(CellId state) const { return ranked.at(state.value()); }
  friend bool operator==(const RankedPolicy&, const RankedPolicy&) = default;
};

RankedPolicy rank_actions(const QTable& q);

// An action's transition and reward rows over successor states.
struct MdpAction {
  CellId destination;
  std::vector<double> p;
  std::vector<double> r;
};

// choices[l] is the full action set A(l), used while the agent sits in the
// loop cell l. passive[i] is the single customer-driven action of a cell the
// agent is not currently deciding in.
struct MdpModel {
  std::size_t n_q = 0;
  double gamma = 0.8;
  std::vector<std::vector<MdpAction>> choices;
  std::vector<MdpAction> passive;
  ActionIndexPtr index;

  // Throws InputError on shape errors, rows not summing to one, or gamma
  // outside (0,1).
  void validate(double tol = 1e-12) const;
};

struct BuildOptions {
  // Drop choice actions a^l_j (j != l) with L[l,j] = 0.
  bool sparse = false;
};

MdpModel build_mdp(const DemandModel& dm, double gamma, const BuildOptions& options = {});

// Assembles a model from hand-written rows; derives the index from choices.
MdpModel make_mdp(std::size_t n_q, double gamma, std::vector<std::vector<MdpAction>> choices,
                  std::vector<MdpAction> passive);

struct MpiOptions {
  int eval_sweeps = 10;
  double tol = 1e-8;
  int max_iterations = 10000;
};

struct MpiSolution {
  QTable q;
  RankedPolicy ranked;
  // loop_values[l] is the state value vector of the loop-l problem.
  std::vector<std::vector<double>> loop_values;
  double residual = 0.0;
  int iterations = 0;  // largest over loops
};

// Modified policy iteration, one problem per loop cell. Throws
// ConvergenceError if a loop does not converge within max_iterations.
MpiSolution solve_mpi(const MdpModel& mdp, const MpiOptions& options = {});

// max |Q - T(Q)| where T backs every Q entry up through one Bellman step of
// its loop problem, evaluated at loop_values.
double bellman_residual(const MdpModel& mdp, const QTable& q,
                        const std::vector<std::vector<double>>& loop_values);

struct KappaBound {
  double d = 0.0;
  double kappa = 0.0;
};

// Asymptotic error of a stationary model under drift of size (epsilon,
// delta) in transitions and rewards.
KappaBound kappa_bound(double epsilon, double delta, double gamma, double r_inf);

struct ModelDrift {
  double epsilon = 0.0;  // elementwise max |P_a - P_b|
  double delta = 0.0;    // elementwise max |R_a - R_b|
};

ModelDrift model_drift(const MdpModel& a, const MdpModel& b);

// Largest |R| over every action and successor.
double reward_sup_norm(const MdpModel& mdp);

// --- persistence -------------------------------------------------------------

inline constexpr int kQTableFormatVersion = 1;
inline constexpr int kDemandFormatVersion = 1;

struct SavedSolution {
  QTable q;
  RankedPolicy ranked;
  double gamma = 0.8;
};

std::string serialize_solution(const QTable& q, const RankedPolicy& ranked, double gamma);
SavedSolution parse_solution(const std::string& text);
void save_solution(const std::string& path, const QTable& q, const RankedPolicy& ranked,
                   double gamma);
SavedSolution load_solution(const std::string& path);

std::string serialize_demand(const DemandModel& dm);
DemandModel parse_demand(const std::string& text);
void save_demand(const std::string& path, const DemandModel& dm);
DemandModel load_demand(const std::string& path);

}  // namespace fleetrl

#endif  // FLEETRL_MDP_HPP_
