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

#include "fleetrl/sarsa.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace fleetrl {

void check_event(const ActionIndex& index, const SarsaUpdateEvent& ev) {
  if (!index.find(ev.state, ev.action)) {
    throw IndexError(fmt::format("event action {}->{} not in the index", ev.state.value(),
                                 ev.action.value()));
  }
  if (ev.successor != ev.action) {
    throw IndexError(fmt::format("event successor {} differs from the action destination {}",
                                 ev.successor.value(), ev.action.value()));
  }
  if (ev.successor_action && !index.find(ev.successor, *ev.successor_action)) {
    throw IndexError(fmt::format("successor action {}->{} not in the index",
                                 ev.successor.value(), ev.successor_action->value()));
  }
}

double successor_value(const QTable& q, const SarsaUpdateEvent& ev) {
  if (ev.successor_action) return q.at(ev.successor, *ev.successor_action);
  return q.best_value(ev.successor);
}

double loss_gradient(const QTable& q, const SarsaUpdateEvent& ev, double gamma) {
  check_event(q.index(), ev);
  return q.at(ev.state, ev.action) - ev.reward - gamma * successor_value(q, ev);
}

AdaptiveRateState AdaptiveRateState::init(std::size_t n_pairs, double zeta, double g_min) {
  if (!(zeta > 0.0 && zeta < 1.0)) throw DomainError(fmt::format("zeta {} outside (0,1)", zeta));
  if (!(g_min > 0.0)) throw DomainError("g_min must be positive");
  AdaptiveRateState rs;
  rs.f.assign(n_pairs, 1.0);
  rs.g.assign(n_pairs, 1.0);
  rs.zeta = zeta;
  rs.g_min = g_min;
  return rs;
}

RateUpdate current_rate(const AdaptiveRateState& rs, std::size_t pair) {
  if (pair >= rs.size()) throw IndexError(fmt::format("pair {} out of range", pair));
  const double g = rs.g[pair];
  if (!(g >= rs.g_min)) return {0.0, true};
  const double f = rs.f[pair];
  return {std::clamp(f * f / g, 0.0, 1.0), false};
}

RateUpdate update_rate(AdaptiveRateState& rs, std::size_t pair, double grad, int rho) {
  if (rho != 0 && rho != 1) throw InputError(fmt::format("rho must be 0 or 1, got {}", rho));
  if (pair >= rs.size()) throw IndexError(fmt::format("pair {} out of range", pair));
  if (rho == 1) {
    rs.f[pair] += rs.zeta * (grad - rs.f[pair]);
    rs.g[pair] += rs.zeta * (grad * grad - rs.g[pair]);
  }
  return current_rate(rs, pair);
}

double gradient_variance(const AdaptiveRateState& rs, std::size_t pair) {
  if (pair >= rs.size()) throw IndexError(fmt::format("pair {} out of range", pair));
  return std::max(0.0, rs.g[pair] - rs.f[pair] * rs.f[pair]);
}

SarsaStep sarsa_step(QTable& q, AdaptiveRateState& rs, const SarsaUpdateEvent& ev,
                     double gamma) {
  if (rs.size() != q.size()) throw InputError("rate state and Q-table sizes differ");
  SarsaStep step;
  step.gradient = loss_gradient(q, ev, gamma);
  step.pair = q.index().at(ev.state, ev.action);
  const RateUpdate rate = update_rate(rs, step.pair, step.gradient, 1);
  step.alpha = rate.alpha;
  step.underflow = rate.underflow;
  q[step.pair] -= step.alpha * step.gradient;
  return step;
}

}  // namespace fleetrl
