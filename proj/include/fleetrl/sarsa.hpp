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

#ifndef FLEETRL_SARSA_HPP_
#define FLEETRL_SARSA_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include "fleetrl/mdp.hpp"
#include "fleetrl/types.hpp"

namespace fleetrl {

// One observed transition: the agent took action (state -> action) and was
// paid reward, ending in successor. successor_action is the action already
// chosen at the successor, or none when the agent went idle there.
struct SarsaUpdateEvent {
  CellId state;
  CellId action;
  CellId successor;
  std::optional<CellId> successor_action;
  double reward = 0.0;

  friend bool operator==(const SarsaUpdateEvent&, const SarsaUpdateEvent&) = default;
};

// Throws IndexError if the event does not fit q's index map.
void check_event(const ActionIndex& index, const SarsaUpdateEvent& ev);

// Q(successor, successor_action), or the best successor value when none.
double successor_value(const QTable& q, const SarsaUpdateEvent& ev);

// Q(i,a) - R - gamma * Q(j, pi[j]).
double loss_gradient(const QTable& q, const SarsaUpdateEvent& ev, double gamma);

// Exponential moving averages of the per-pair loss gradient (f) and of its
// square (g). The learning rate is f^2 / g.
struct AdaptiveRateState {
  std::vector<double> f;
  std::vector<double> g;
  double zeta = 0.2;
  double g_min = 1e-12;

  // f = g = 1 everywhere.
  static AdaptiveRateState init(std::size_t n_pairs, double zeta = 0.2, double g_min = 1e-12);

  std::size_t size() const { return f.size(); }
};

struct RateUpdate {
  double alpha = 0.0;
  // g fell below g_min; alpha was forced to 0.
  bool underflow = false;
};

// f^2 / g at a pair, clamped to [0,1].
RateUpdate current_rate(const AdaptiveRateState& rs, std::size_t pair);

// Moves f and g toward grad and grad^2 when rho = 1 and returns the new rate.
// rho = 0 leaves the state untouched.
RateUpdate update_rate(AdaptiveRateState& rs, std::size_t pair, double grad, int rho);

// g - f^2 at a pair, floored at 0. A drifting value hints that the gradient
// noise is not stationary.
double gradient_variance(const AdaptiveRateState& rs, std::size_t pair);

struct SarsaStep {
  std::size_t pair = 0;
  double gradient = 0.0;
  double alpha = 0.0;
  bool underflow = false;
};

// Q(i,a) <- Q(i,a) - alpha * gradient, with alpha from update_rate at rho = 1.
SarsaStep sarsa_step(QTable& q, AdaptiveRateState& rs, const SarsaUpdateEvent& ev,
                     double gamma);

}  // namespace fleetrl

#endif  // FLEETRL_SARSA_HPP_
