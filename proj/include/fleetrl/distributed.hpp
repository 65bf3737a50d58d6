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

#ifndef FLEETRL_DISTRIBUTED_HPP_
#define FLEETRL_DISTRIBUTED_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fleetrl/consensus.hpp"
#include "fleetrl/mdp.hpp"
#include "fleetrl/sarsa.hpp"

namespace fleetrl {

// Learning state held by one agent of the fleet.
struct AgentLearnState {
  QTable q_hat;
  // Tracked loss gradient, one entry per state-action pair.
  std::vector<double> omega;
  // f_hat and g_hat live in rates.f / rates.g.
  AdaptiveRateState rates;
  // Rate last used at each pair.
  std::vector<double> alpha;
  // The agent's previous gradient input N * i_{t-1} * g_{t-1}.
  SparseVector last_local_input;

  // q_hat = q_star, omega = 0, f_hat = g_hat = 1.
  static AgentLearnState warm_start(const QTable& q_star, double zeta = 0.2);
};

struct LocalCorrection {
  // R + gamma * Q_hat(j, pi[j]) - Q_hat(l, a); 0 when idle.
  double r = 0.0;
  std::optional<std::size_t> pair;
};

LocalCorrection local_correction(const AgentLearnState& agent,
                                 const std::optional<SarsaUpdateEvent>& ev, double gamma);

struct AgentTickRecord {
  std::size_t agent = 0;
  std::size_t pair = 0;
  double r = 0.0;
  double alpha = 0.0;
};

struct LearnTick {
  std::vector<AgentTickRecord> records;  // one per observing agent
  // Sum over agents of the Q-estimate inputs N * alpha * r, per pair.
  SparseVector q_inputs;
};

// One learning round of the fleet. Per observing agent i with pair p:
//   r = -loss_gradient, omega input N * (g_t at p - g_{t-1} at p_{t-1}),
//   f_hat, g_hat at p move toward the tracked omega(p),
//   alpha = f_hat^2 / g_hat, Q input N * alpha * r at p.
// Both consensus rounds read pre-round states.
LearnTick fleet_learn_tick(std::vector<AgentLearnState>& agents, const CommGraph& graph,
                           std::span<const std::optional<SarsaUpdateEvent>> events,
                           double gamma);

// max over agent pairs of ||q_hat^i - q_hat^k||_inf.
double disagreement(std::span<const AgentLearnState> agents);

// Entrywise mean of the agents' q_hat values.
std::vector<double> mean_estimate(std::span<const AgentLearnState> agents);

}  // namespace fleetrl

#endif  // FLEETRL_DISTRIBUTED_HPP_
