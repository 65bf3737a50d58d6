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

#include "fleetrl/distributed.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace fleetrl {

AgentLearnState AgentLearnState::warm_start(const QTable& q_star, double zeta) {
  AgentLearnState s;
  s.q_hat = q_star;
  s.omega.assign(q_star.size(), 0.0);
  s.rates = AdaptiveRateState::init(q_star.size(), zeta);
  s.alpha.assign(q_star.size(), 1.0);
  return s;
}

LocalCorrection local_correction(const AgentLearnState& agent,
                                 const std::optional<SarsaUpdateEvent>& ev, double gamma) {
  if (!ev) return {};
  LocalCorrection c;
  c.r = -loss_gradient(agent.q_hat, *ev, gamma);
  c.pair = agent.q_hat.index().at(ev->state, ev->action);
  return c;
}

LearnTick fleet_learn_tick(std::vector<AgentLearnState>& agents, const CommGraph& graph,
                           std::span<const std::optional<SarsaUpdateEvent>> events,
                           double gamma) {
  const std::size_t n = agents.size();
  if (events.size() != n || graph.n_agents() != n) {
    throw InputError(fmt::format("fleet_learn_tick: {} agents, {} events, {}-agent graph", n,
                                 events.size(), graph.n_agents()));
  }
  LearnTick tick;
  if (n == 0) return tick;
  const double scale = static_cast<double>(n);

  std::vector<LocalCorrection> corrections(n);
  std::vector<SparseVector> omega_inputs(n);
  for (std::size_t i = 0; i < n; ++i) {
    corrections[i] = local_correction(agents[i], events[i], gamma);
    for (const auto& e : agents[i].last_local_input) omega_inputs[i].push_back({e.index, -e.value});
    if (corrections[i].pair) {
      omega_inputs[i].push_back({*corrections[i].pair, scale * -corrections[i].r});
    }
  }

  std::vector<std::span<double>> omegas;
  for (auto& a : agents) omegas.emplace_back(a.omega);
  track_step(omegas, graph, omega_inputs);

  std::vector<SparseVector> q_inputs(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& agent = agents[i];
    agent.last_local_input.clear();
    const auto& c = corrections[i];
    if (!c.pair) continue;
    const std::size_t p = *c.pair;
    const RateUpdate rate = update_rate(agent.rates, p, agent.omega[p], 1);
    agent.alpha[p] = rate.alpha;
    q_inputs[i].push_back({p, scale * rate.alpha * c.r});
    agent.last_local_input.push_back({p, scale * -c.r});
    tick.records.push_back({i, p, c.r, rate.alpha});
    tick.q_inputs.push_back(q_inputs[i].back());
  }

  std::vector<std::span<double>> qs;
  for (auto& a : agents) qs.push_back(a.q_hat.values());
  track_step(qs, graph, q_inputs);
  return tick;
}

double disagreement(std::span<const AgentLearnState> agents) {
  if (agents.empty()) return 0.0;
  const std::size_t dim = agents.front().q_hat.size();
  double worst = 0.0;
  for (std::size_t d = 0; d < dim; ++d) {
    double lo = agents.front().q_hat[d];
    double hi = lo;
    for (const auto& a : agents) {
      lo = std::min(lo, a.q_hat[d]);
      hi = std::max(hi, a.q_hat[d]);
    }
    worst = std::max(worst, hi - lo);
  }
  return worst;
}

std::vector<double> mean_estimate(std::span<const AgentLearnState> agents) {
  if (agents.empty()) return {};
  std::vector<double> mean(agents.front().q_hat.size(), 0.0);
  for (const auto& a : agents) {
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += a.q_hat[d];
  }
  for (double& m : mean) m /= static_cast<double>(agents.size());
  return mean;
}

}  // namespace fleetrl
