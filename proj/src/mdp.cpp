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

#include "fleetrl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "fleetrl/parallel.hpp"

namespace fleetrl {

// --- ActionIndex / QTable ----------------------------------------------------

ActionIndex ActionIndex::dense(std::size_t n_q) {
  std::vector<std::vector<CellId>> sets(n_q);
  for (auto& s : sets) {
    s.reserve(n_q);
    for (std::size_t j = 0; j < n_q; ++j) s.emplace_back(static_cast<std::uint32_t>(j));
  }
  return from_sets(std::move(sets));
}

ActionIndex ActionIndex::from_sets(std::vector<std::vector<CellId>> sets) {
  const std::size_t n_q = sets.size();
  ActionIndex index;
  index.offsets_.assign(1, 0);
  index.lookup_.assign(n_q * n_q, -1);
  for (std::size_t l = 0; l < n_q; ++l) {
    auto& s = sets[l];
    std::sort(s.begin(), s.end());
    s.erase(std::unique(s.begin(), s.end()), s.end());
    for (CellId dest : s) {
      if (dest.value() >= n_q) {
        throw InputError(fmt::format("action {}->{} leaves the {}-cell map", l, dest.value(), n_q));
      }
      index.lookup_[l * n_q + dest.value()] = static_cast<std::ptrdiff_t>(index.destinations_.size());
      index.destinations_.push_back(dest);
    }
    index.offsets_.push_back(index.destinations_.size());
  }
  return index;
}

std::span<const CellId> ActionIndex::actions(CellId state) const {
  return std::span<const CellId>(destinations_).subspan(begin(state), end(state) - begin(state));
}

std::optional<std::size_t> ActionIndex::find(CellId state, CellId destination) const {
  const std::size_t n_q = n_cells();
  if (state.value() >= n_q || destination.value() >= n_q) return std::nullopt;
  const auto k = lookup_[state.value() * n_q + destination.value()];
  if (k < 0) return std::nullopt;
  return static_cast<std::size_t>(k);
}

std::size_t ActionIndex::at(CellId state, CellId destination) const {
  if (auto k = find(state, destination)) return *k;
  throw IndexError(fmt::format("no action {}->{} in the action index", state.value(),
                               destination.value()));
}

CellId ActionIndex::state_of(std::size_t offset) const {
  if (offset >= size()) throw IndexError(fmt::format("offset {} out of range", offset));
  const auto it = std::upper_bound(offsets_.begin(), offsets_.end(), offset);
  return CellId(static_cast<std::uint32_t>(std::distance(offsets_.begin(), it) - 1));
}

QTable::QTable(ActionIndexPtr index, double fill)
    : index_(std::move(index)), values_(index_->size(), fill) {}

CellId QTable::best_action(CellId state) const {
  const std::size_t b = index_->begin(state);
  const std::size_t e = index_->end(state);
  if (b == e) throw IndexError(fmt::format("cell {} has no actions", state.value()));
  std::size_t best = b;
  for (std::size_t k = b + 1; k < e; ++k) {
    if (values_[k] > values_[best]) best = k;
  }
  return index_->destination_of(best);
}

double QTable::best_value(CellId state) const {
  return values_[index_->at(state, best_action(state))];
}

RankedPolicy rank_actions(const QTable& q) {
  const auto& index = q.index();
  RankedPolicy policy;
  policy.ranked.resize(index.n_cells());
  for (std::size_t l = 0; l < index.n_cells(); ++l) {
    const CellId state(static_cast<std::uint32_t>(l));
    std::vector<std::size_t> offsets(index.end(state) - index.begin(state));
    std::iota(offsets.begin(), offsets.end(), index.begin(state));
    // Offsets ascend with destination, so a stable sort keeps ties in
    // destination order.
    std::stable_sort(offsets.begin(), offsets.end(),
                     [&](std::size_t a, std::size_t b) { return q[a] > q[b]; });
    auto& out = policy.ranked[l];
    for (std::size_t k : offsets) out.push_back(index.destination_of(k));
  }
  return policy;
}

// --- model construction ------------------------------------------------------

void MdpModel::validate(double tol) const {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw DomainError(fmt::format("discount {} outside (0,1)", gamma));
  }
  if (choices.size() != n_q || passive.size() != n_q) {
    throw InputError("MDP needs one choice set and one passive action per cell");
  }
  if (!index || index->n_cells() != n_q) throw InputError("MDP action index does not match n_q");
  auto check_row = [&](const MdpAction& a, std::size_t state, const char* kind) {
    if (a.p.size() != n_q || a.r.size() != n_q) {
      throw InputError(fmt::format("cell {}: {} action rows must have {} entries", state, kind, n_q));
    }
    double sum = 0.0;
    for (double p : a.p) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw InputError(fmt::format("cell {}: {} transition probability {} outside [0,1]",
                                     state, kind, p));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) {
      throw InputError(fmt::format("cell {}: {} transition row sums to {}", state, kind, sum));
    }
  };
  for (std::size_t l = 0; l < n_q; ++l) {
    const CellId state(static_cast<std::uint32_t>(l));
    if (choices[l].size() != index->actions(state).size()) {
      throw InputError(fmt::format("cell {}: choice set does not match index", l));
    }
    for (const auto& a : choices[l]) check_row(a, l, "choice");
    check_row(passive[l], l, "passive");
  }
}

MdpModel make_mdp(std::size_t n_q, double gamma, std::vector<std::vector<MdpAction>> choices,
                  std::vector<MdpAction> passive) {
  MdpModel mdp;
  mdp.n_q = n_q;
  mdp.gamma = gamma;
  std::vector<std::vector<CellId>> sets;
  for (auto& c : choices) {
    std::sort(c.begin(), c.end(), [](const MdpAction& a, const MdpAction& b) {
      return a.destination < b.destination;
    });
    auto& s = sets.emplace_back();
    for (const auto& a : c) s.push_back(a.destination);
    if (std::adjacent_find(s.begin(), s.end()) != s.end()) {
      throw InputError("duplicate destination in a choice set");
    }
  }
  mdp.choices = std::move(choices);
  mdp.passive = std::move(passive);
  mdp.index = std::make_shared<const ActionIndex>(ActionIndex::from_sets(std::move(sets)));
  mdp.validate(1e-9);
  return mdp;
}

MdpModel build_mdp(const DemandModel& dm, double gamma, const BuildOptions& options) {
  dm.validate();
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw DomainError(fmt::format("discount {} outside (0,1)", gamma));
  }
  const std::size_t n_q = dm.n_cells();
  auto cell = [](std::size_t i) { return CellId(static_cast<std::uint32_t>(i)); };

  // Probability of staying put while customer-driven: 1 + L[i,i] - sum_j L[i,j].
  std::vector<double> stay(n_q);
  for (std::size_t i = 0; i < n_q; ++i) {
    stay[i] = 1.0 - dm.departure_mass(cell(i));
    if (!(stay[i] > 0.0)) {
      throw DomainError(fmt::format(
          "cell {}: 1 + L[i,i] - sum_k L[i,k] = {} is not positive", i, stay[i]));
    }
  }
  auto reward = [&](std::size_t i, std::size_t j) {
    if (i != j) return dm.reward(cell(i), cell(j));
    return dm.probability(cell(i), cell(i)) * dm.reward(cell(i), cell(i)) / stay[i];
  };

  MdpModel mdp;
  mdp.n_q = n_q;
  mdp.gamma = gamma;
  mdp.choices.resize(n_q);
  mdp.passive.resize(n_q);
  std::vector<std::vector<CellId>> sets(n_q);
  for (std::size_t l = 0; l < n_q; ++l) {
    for (std::size_t j = 0; j < n_q; ++j) {
      if (options.sparse && j != l && dm.probability(cell(l), cell(j)) == 0.0) continue;
      MdpAction a{cell(j), std::vector<double>(n_q, 0.0), std::vector<double>(n_q, 0.0)};
      a.p[j] = 1.0;
      a.r[j] = reward(l, j);
      mdp.choices[l].push_back(std::move(a));
      sets[l].push_back(cell(j));
    }
    MdpAction& passive = mdp.passive[l];
    passive.destination = cell(l);
    passive.p.assign(n_q, 0.0);
    passive.r.assign(n_q, 0.0);
    for (std::size_t k = 0; k < n_q; ++k) {
      passive.p[k] = k == l ? stay[l] : dm.probability(cell(l), cell(k));
      passive.r[k] = reward(l, k);
    }
  }
  mdp.index = std::make_shared<const ActionIndex>(ActionIndex::from_sets(std::move(sets)));
  return mdp;
}

// --- modified policy iteration ----------------------------------------------

namespace {

double backup(const MdpAction& a, std::span<const double> v, double gamma) {
  double q = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (a.p[k] != 0.0) q += a.p[k] * (a.r[k] + gamma * v[k]);
  }
  return q;
}

struct Greedy {
  std::size_t action = 0;
  double value = 0.0;
};

Greedy greedy_choice(const MdpModel& mdp, std::size_t loop, std::span<const double> v) {
  Greedy g{0, -std::numeric_limits<double>::infinity()};
  const auto& actions = mdp.choices[loop];
  for (std::size_t a = 0; a < actions.size(); ++a) {
    const double q = backup(actions[a], v, mdp.gamma);
    if (q > g.value) g = {a, q};
  }
  return g;
}

// One optimal backup of the loop-l problem.
std::vector<double> optimal_backup(const MdpModel& mdp, std::size_t loop,
                                   std::span<const double> v) {
  std::vector<double> out(mdp.n_q);
  for (std::size_t i = 0; i < mdp.n_q; ++i) {
    out[i] = i == loop ? greedy_choice(mdp, loop, v).value
                       : backup(mdp.passive[i], v, mdp.gamma);
  }
  return out;
}

struct LoopResult {
  std::vector<double> values;
  int iterations = 0;
};

LoopResult solve_loop(const MdpModel& mdp, std::size_t loop, const MpiOptions& options) {
  const std::size_t n_q = mdp.n_q;
  if (mdp.choices[loop].empty()) {
    throw InputError(fmt::format("cell {} has an empty action set", loop));
  }
  std::vector<double> v(n_q, 0.0);
  std::vector<double> next(n_q);
  double residual = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iterations; ++it) {
    const Greedy improved = greedy_choice(mdp, loop, v);
    residual = 0.0;
    for (std::size_t i = 0; i < n_q; ++i) {
      const double tv = i == loop ? improved.value : backup(mdp.passive[i], v, mdp.gamma);
      residual = std::max(residual, std::abs(tv - v[i]));
    }
    // |Q - T(Q)| <= gamma * |V - T*V|.
    if (mdp.gamma * residual < options.tol) return {std::move(v), it};

    const MdpAction& policy = mdp.choices[loop][improved.action];
    for (int sweep = 0; sweep < options.eval_sweeps; ++sweep) {
      for (std::size_t i = 0; i < n_q; ++i) {
        next[i] = backup(i == loop ? policy : mdp.passive[i], v, mdp.gamma);
      }
      v.swap(next);
    }
  }
  throw ConvergenceError(
      fmt::format("MPI did not converge for loop cell {} after {} iterations (residual {})",
                  loop, options.max_iterations, residual),
      residual);
}

}  // namespace

MpiSolution solve_mpi(const MdpModel& mdp, const MpiOptions& options) {
  mdp.validate();
  if (options.eval_sweeps < 1) throw InputError("eval_sweeps must be >= 1");
  if (!(options.tol > 0.0)) throw InputError("tol must be positive");
  if (options.max_iterations < 1) throw InputError("max_iterations must be >= 1");

  std::vector<LoopResult> loops(mdp.n_q);
  parallel_for(mdp.n_q, [&](std::size_t l) { loops[l] = solve_loop(mdp, l, options); });

  MpiSolution sol;
  sol.q = QTable(mdp.index);
  for (std::size_t l = 0; l < mdp.n_q; ++l) {
    const CellId state(static_cast<std::uint32_t>(l));
    const std::size_t base = mdp.index->begin(state);
    for (std::size_t a = 0; a < mdp.choices[l].size(); ++a) {
      sol.q[base + a] = backup(mdp.choices[l][a], loops[l].values, mdp.gamma);
    }
    sol.iterations = std::max(sol.iterations, loops[l].iterations);
    sol.loop_values.push_back(std::move(loops[l].values));
  }
  sol.ranked = rank_actions(sol.q);
  sol.residual = bellman_residual(mdp, sol.q, sol.loop_values);
  return sol;
}

double bellman_residual(const MdpModel& mdp, const QTable& q,
                        const std::vector<std::vector<double>>& loop_values) {
  if (loop_values.size() != mdp.n_q) throw InputError("need one value vector per loop cell");
  double residual = 0.0;
  for (std::size_t l = 0; l < mdp.n_q; ++l) {
    const CellId state(static_cast<std::uint32_t>(l));
    const auto tv = optimal_backup(mdp, l, loop_values[l]);
    const std::size_t base = mdp.index->begin(state);
    for (std::size_t a = 0; a < mdp.choices[l].size(); ++a) {
      residual = std::max(residual, std::abs(q[base + a] - backup(mdp.choices[l][a], tv, mdp.gamma)));
    }
  }
  return residual;
}

// --- bounds --------------------------------------------------------------------

KappaBound kappa_bound(double epsilon, double delta, double gamma, double r_inf) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw DomainError(fmt::format("discount {} outside (0,1)", gamma));
  }
  if (!(epsilon >= 0.0) || !(delta >= 0.0) || !(r_inf >= 0.0)) {
    throw DomainError("epsilon, delta and |R|_inf must be nonnegative");
  }
  const double horizon = 1.0 - gamma;
  KappaBound b;
  b.d = epsilon * gamma * r_inf / (horizon * horizon) + delta / horizon;
  b.kappa = 4.0 * b.d / horizon;
  return b;
}

ModelDrift model_drift(const MdpModel& a, const MdpModel& b) {
  if (a.n_q != b.n_q || a.choices.size() != b.choices.size() ||
      a.passive.size() != b.passive.size()) {
    throw InputError("model_drift: models differ in shape");
  }
  ModelDrift drift;
  auto compare = [&](const MdpAction& x, const MdpAction& y) {
    if (x.destination != y.destination || x.p.size() != y.p.size() || x.r.size() != y.r.size()) {
      throw InputError("model_drift: action structures differ");
    }
    for (std::size_t k = 0; k < x.p.size(); ++k) {
      drift.epsilon = std::max(drift.epsilon, std::abs(x.p[k] - y.p[k]));
      drift.delta = std::max(drift.delta, std::abs(x.r[k] - y.r[k]));
    }
  };
  for (std::size_t l = 0; l < a.n_q; ++l) {
    if (a.choices[l].size() != b.choices[l].size()) {
      throw InputError(fmt::format("model_drift: cell {} action sets differ", l));
    }
    for (std::size_t k = 0; k < a.choices[l].size(); ++k) compare(a.choices[l][k], b.choices[l][k]);
    compare(a.passive[l], b.passive[l]);
  }
  return drift;
}

double reward_sup_norm(const MdpModel& mdp) {
  double norm = 0.0;
  auto scan = [&](const MdpAction& a) {
    for (double r : a.r) norm = std::max(norm, std::abs(r));
  };
  for (const auto& set : mdp.choices) {
    for (const auto& a : set) scan(a);
  }
  for (const auto& a : mdp.passive) scan(a);
  return norm;
}

}  // namespace fleetrl
