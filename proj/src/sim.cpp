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

#include "fleetrl/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <random>

#include <fmt/format.h>

#include "fleetrl/consensus.hpp"
#include "fleetrl/parallel.hpp"
#include "fleetrl/sarsa.hpp"

namespace fleetrl {

namespace {

constexpr std::string_view kPolicyNames[] = {"distributed-sarsa", "centralized-sarsa",
                                             "mdp-static", "greedy", "shortest-path"};

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

enum class Status { kIdle, kToPickup, kCarrying };

struct Leg {
  Point from;
  Point to;
  std::int64_t ticks = 0;
  std::int64_t elapsed = 0;
  bool carrying = false;
  // Index into the agent's current requests of the customer dropped here.
  std::optional<std::size_t> drop;
};

struct SimAgent {
  Point position;
  Status status = Status::kIdle;
  std::vector<Request> requests;
  std::deque<Leg> legs;
  // Event of the trip in progress; completed at drop-off and learned from
  // one tick later, once the next action is known.
  SarsaUpdateEvent trip_event;
  std::optional<SarsaUpdateEvent> pending;
};

struct OpenRequest {
  Request request;
  std::int64_t spawned = 0;
};

std::int64_t travel_ticks(const Point& a, const Point& b, double speed, bool at_least_one) {
  const auto t = static_cast<std::int64_t>(std::ceil(distance(a, b) / speed - 1e-9));
  return at_least_one ? std::max<std::int64_t>(1, t) : std::max<std::int64_t>(0, t);
}

Task to_task(const Request& r) {
  return {r.id, r.pickup_point, r.dropoff_point, r.trip.pickup, r.trip.dropoff, r.trip.fare};
}

// Source of requests: synthetic generator or a replayed trip file.
class RequestSource {
 public:
  RequestSource(const SimConfig& cfg)
      : generator_(cfg.scenario, cfg.seed), points_(stream(cfg.seed, 4)) {
    if (!cfg.trips_file.empty()) {
      auto ingested = ingest_trips_file(cfg.trips_file, cfg.scenario.grid);
      replay_ = std::move(ingested.trips);
      std::stable_sort(replay_.begin(), replay_.end(),
                       [](const TripRecord& a, const TripRecord& b) {
                         return a.start_time < b.start_time;
                       });
      offset_ = cfg.trips_tick_offset;
      from_file_ = true;
    }
    grid_ = cfg.scenario.grid;
  }

  std::vector<Request> generate(std::int64_t tick) {
    if (!from_file_) return generator_.generate(tick);
    std::vector<Request> out;
    while (next_ < replay_.size() && replay_[next_].start_time - offset_ <= tick) {
      const TripRecord& trip = replay_[next_++];
      if (trip.start_time - offset_ < tick) continue;  // before the run started
      Request r;
      r.id = next_id_++;
      r.trip = trip;
      r.pickup_point = grid_.sample_in_cell(trip.pickup, points_);
      r.dropoff_point = grid_.sample_in_cell(trip.dropoff, points_);
      out.push_back(r);
    }
    return out;
  }

  bool exhausted() const { return from_file_ && next_ >= replay_.size(); }

 private:
  TripGenerator generator_;
  std::mt19937_64 points_;
  GridGeometry grid_;
  std::vector<TripRecord> replay_;
  std::size_t next_ = 0;
  std::int64_t offset_ = 0;
  std::uint64_t next_id_ = 0;
  bool from_file_ = false;
};

}  // namespace

std::string_view policy_name(Policy policy) { return kPolicyNames[static_cast<int>(policy)]; }

Policy parse_policy(std::string_view name) {
  for (int i = 0; i < 5; ++i) {
    if (kPolicyNames[i] == name) return static_cast<Policy>(i);
  }
  throw InputError(fmt::format("unknown policy '{}'", name));
}

void SimConfig::validate() const {
  if (horizon < 1) throw InputError("horizon must be at least 1 tick");
  if (request_ttl < 1) throw InputError("request_ttl must be at least 1 tick");
  if (snapshot_every < 1) throw InputError("snapshot_every must be at least 1 tick");
  if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError(fmt::format("gamma {} outside (0,1)", gamma));
  if (!(zeta > 0.0 && zeta < 1.0)) throw DomainError(fmt::format("zeta {} outside (0,1)", zeta));
  if (!(scenario.speed_km_per_tick > 0.0)) throw DomainError("speed must be positive");
  game.validate();
  scenario.validate();
  for (const auto& [s, d] : tracked_pairs) {
    if (s.value() >= scenario.n_cells() || d.value() >= scenario.n_cells()) {
      throw InputError(fmt::format("tracked pair {}->{} outside the map", s.value(), d.value()));
    }
  }
}

WarmStart warm_start(const SimConfig& cfg) {
  WarmStart w;
  if (cfg.trips_file.empty()) {
    w.demand = expected_model(cfg.scenario, 0);
  } else {
    const auto ingested = ingest_trips_file(cfg.trips_file, cfg.scenario.grid);
    EstimateOptions opts;
    opts.motion = cfg.scenario.motion;
    w.demand = estimate_demand(ingested.trips, cfg.scenario.n_cells(), {}, opts);
  }
  w.solution = solve_mpi(build_mdp(w.demand, cfg.gamma), cfg.mpi);
  return w;
}

RunMetrics run(const SimConfig& cfg) { return run(cfg, warm_start(cfg)); }

RunMetrics run(const SimConfig& cfg, const WarmStart& warm) {
  cfg.validate();
  const std::size_t n = cfg.n_agents;
  const GridGeometry& grid = cfg.scenario.grid;
  const double speed = cfg.scenario.speed_km_per_tick;
  const bool distributed = cfg.policy == Policy::kDistributedSarsa;
  const bool centralized = cfg.policy == Policy::kCentralizedSarsa;
  const bool uses_q = distributed || centralized || cfg.policy == Policy::kMdpStatic;

  RunMetrics m;
  RequestSource source(cfg);
  std::mt19937_64 placement = stream(cfg.seed, 1);
  std::mt19937_64 game_rng = stream(cfg.seed, 2);

  std::vector<SimAgent> agents(n);
  for (auto& a : agents) a.position = grid.sample_on_map(placement);

  const QTable& q_star = warm.solution.q;
  QTable shared_q = q_star;
  AdaptiveRateState shared_rates = AdaptiveRateState::init(q_star.size(), cfg.zeta);
  std::vector<AgentLearnState> learners;
  if (distributed) {
    learners.assign(n, AgentLearnState::warm_start(q_star, cfg.zeta));
  }
  const bool shadow = distributed && cfg.shadow_centralized;
  QTable shadow_q = q_star;
  AdaptiveRateState shadow_rates = AdaptiveRateState::init(q_star.size(), cfg.zeta);

  std::vector<std::size_t> tracked;
  for (const auto& [s, d] : cfg.tracked_pairs) tracked.push_back(q_star.index().at(s, d));

  auto q_for = [&](std::size_t agent) -> const QTable& {
    if (distributed) return learners[agent].q_hat;
    if (centralized) return shared_q;
    return q_star;
  };

  std::vector<OpenRequest> open;
  std::vector<double> last_omega_input(n, 0.0);
  double revenue = 0.0;

  auto snapshot = [&](std::int64_t tick) {
    for (std::size_t k = 0; k < tracked.size(); ++k) {
      QSnapshot s;
      s.tick = tick;
      s.pair = k;
      if (distributed) {
        for (const auto& l : learners) s.values.push_back(l.q_hat[tracked[k]]);
      } else {
        s.values.push_back(q_for(0)[tracked[k]]);
      }
      if (shadow) s.centralized = shadow_q[tracked[k]];
      m.snapshots.push_back(std::move(s));
    }
    if (distributed) m.disagreement.emplace_back(tick, disagreement(learners));
  };

  for (std::int64_t tick = 0; tick < cfg.horizon; ++tick) {
    // (1) Requests.
    std::erase_if(open, [&](const OpenRequest& r) {
      if (tick - r.spawned < cfg.request_ttl) return false;
      ++m.expired;
      return true;
    });
    for (auto& r : source.generate(tick)) {
      ++m.requests;
      open.push_back({std::move(r), tick});
    }

    // (2)-(3) Assignment over idle agents.
    std::vector<std::size_t> idle;
    for (std::size_t i = 0; i < n; ++i) {
      if (agents[i].status == Status::kIdle) idle.push_back(i);
    }
    if (!idle.empty() && !open.empty()) {
      std::vector<Point> positions;
      for (std::size_t i : idle) positions.push_back(agents[i].position);
      std::vector<Task> tasks;
      for (const auto& r : open) tasks.push_back(to_task(r.request));
      ValueFn value = [&](std::size_t g, const GameAction& a) -> double {
        switch (cfg.policy) {
          case Policy::kGreedy:
            return greedy_value(positions[g], a, tasks, cfg.game);
          case Policy::kShortestPath:
            return shortest_path_value(positions[g], a, tasks, cfg.game);
          default:
            return task_value(positions[g], a, tasks, q_for(idle[g]), warm.demand, grid, cfg.game);
        }
      };
      const Game game(positions, tasks, cfg.game, value);
      const AssignmentResult result = run_assignment(game, cfg.game.tau, game_rng);
      ++m.assignment.games;
      m.assignment.rounds += result.rounds;
      if (!result.converged) ++m.assignment.non_converged;

      std::vector<char> taken(tasks.size(), 0);
      for (std::size_t g = 0; g < idle.size(); ++g) {
        const GameAction& a = game.actions(g)[result.profile[g]];
        if (a.is_null()) continue;
        SimAgent& agent = agents[idle[g]];
        const Point start = agent.position;
        agent.requests.clear();
        agent.legs.clear();
        CellId destination;
        if (a.kind == GameAction::Kind::kSingle) {
          const Request& r = open[a.first].request;
          taken[a.first] = 1;
          agent.requests.push_back(r);
          agent.legs.push_back({start, r.pickup_point, travel_ticks(start, r.pickup_point, speed, false), 0, false, {}});
          const auto carry = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(r.trip.duration - 1e-9)));
          agent.legs.push_back({r.pickup_point, r.dropoff_point, carry, 0, true, 0});
          destination = r.trip.dropoff;
          const double motion = warm.demand.motion(r.trip.pickup, r.trip.dropoff);
          agent.trip_event = {r.trip.pickup, r.trip.dropoff, r.trip.dropoff, std::nullopt,
                              motion * r.trip.fare / r.trip.duration};
        } else {
          const Request* r[2] = {&open[a.first].request, &open[a.second].request};
          taken[a.first] = taken[a.second] = 1;
          agent.requests = {*r[0], *r[1]};
          const PoolingRoute route = pooling_route(start, tasks[a.first], tasks[a.second]);
          const Point p1 = r[route.p1]->pickup_point;
          const Point p2 = r[route.p2]->pickup_point;
          const Point d1 = r[route.d1]->dropoff_point;
          const Point d2 = r[route.d2]->dropoff_point;
          agent.legs.push_back({start, p1, travel_ticks(start, p1, speed, false), 0, false, {}});
          agent.legs.push_back({p1, p2, travel_ticks(p1, p2, speed, false), 0, true, {}});
          agent.legs.push_back({p2, d1, travel_ticks(p2, d1, speed, true), 0, true,
                                static_cast<std::size_t>(route.d1)});
          agent.legs.push_back({d1, d2, travel_ticks(d1, d2, speed, true), 0, true,
                                static_cast<std::size_t>(route.d2)});
          std::int64_t carry = 0;
          for (std::size_t k = 1; k < agent.legs.size(); ++k) carry += agent.legs[k].ticks;
          destination = r[route.d2]->trip.dropoff;
          const CellId here = grid.cell_of(start).value_or(r[route.p1]->trip.pickup);
          agent.trip_event = {here, destination, destination, std::nullopt,
                              warm.demand.motion(here, destination) *
                                  (r[0]->trip.fare + r[1]->trip.fare) /
                                  static_cast<double>(carry)};
        }
        agent.status = Status::kToPickup;
        if (agent.pending && q_star.index().find(agent.pending->successor, destination)) {
          agent.pending->successor_action = destination;
        }
        m.served += a.task_count();
      }
      std::vector<OpenRequest> remaining;
      for (std::size_t t = 0; t < open.size(); ++t) {
        if (!taken[t]) remaining.push_back(std::move(open[t]));
      }
      open = std::move(remaining);
    }

    // (4) Learning from drop-offs of the previous tick.
    std::vector<std::optional<SarsaUpdateEvent>> events(n);
    bool any_event = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (agents[i].pending) {
        events[i] = std::move(agents[i].pending);
        agents[i].pending.reset();
        any_event = true;
      }
    }
    if (uses_q && cfg.policy != Policy::kMdpStatic && n > 0) {
      if (distributed) {
        std::vector<Point> positions;
        for (const auto& a : agents) positions.push_back(a.position);
        const CommGraph graph = build_graph(positions, cfg.game.r_comm);
        m.max_sigma = std::max(m.max_sigma, second_singular_value(graph.weights));
        if (!strongly_connected(graph)) ++m.disconnected_ticks;
        const LearnTick lt = fleet_learn_tick(learners, graph, events, cfg.gamma);
        const double scale = static_cast<double>(n);
        std::vector<double> omega_input(n, 0.0);
        for (const auto& rec : lt.records) {
          m.r_max = std::max(m.r_max, std::abs(scale * rec.alpha * rec.r));
          omega_input[rec.agent] = scale * rec.r;
        }
        for (std::size_t i = 0; i < n; ++i) {
          m.dr_max = std::max(m.dr_max, std::abs(omega_input[i] - last_omega_input[i]));
        }
        last_omega_input = std::move(omega_input);
        m.learning_updates += lt.records.size();
        if (cfg.learning_log && !lt.records.empty()) {
          const double dis = disagreement(learners);
          for (const auto& rec : lt.records) m.learning.push_back({tick, rec, dis});
        }
      } else if (centralized && any_event) {
        for (std::size_t i = 0; i < n; ++i) {
          if (!events[i]) continue;
          const SarsaStep step = sarsa_step(shared_q, shared_rates, *events[i], cfg.gamma);
          ++m.learning_updates;
          m.r_max = std::max(m.r_max, std::abs(step.alpha * step.gradient));
          if (cfg.learning_log) {
            m.learning.push_back({tick, {i, step.pair, -step.gradient, step.alpha}, 0.0});
          }
        }
      }
      if (shadow) {
        for (std::size_t i = 0; i < n; ++i) {
          if (events[i]) sarsa_step(shadow_q, shadow_rates, *events[i], cfg.gamma);
        }
      }
    }

    // (5) Movement and drop-offs.
    for (std::size_t i = 0; i < n; ++i) {
      SimAgent& agent = agents[i];
      if (agent.status == Status::kIdle) continue;
      bool moved = false;
      while (!agent.legs.empty()) {
        Leg& leg = agent.legs.front();
        if (leg.ticks > 0) {
          if (moved) break;
          ++leg.elapsed;
          moved = true;
          agent.position = lerp(leg.from, leg.to,
                                static_cast<double>(leg.elapsed) / static_cast<double>(leg.ticks));
          if (leg.elapsed < leg.ticks) break;
        }
        agent.position = leg.to;
        if (leg.drop) {
          const Request& r = agent.requests[*leg.drop];
          revenue += r.trip.fare;
          m.trips.push_back({tick, i, r.id, r.trip.fare});
        }
        agent.legs.pop_front();
        if (!agent.legs.empty() && agent.legs.front().carrying) agent.status = Status::kCarrying;
      }
      if (agent.legs.empty()) {
        agent.status = Status::kIdle;
        agent.requests.clear();
        if (uses_q) agent.pending = agent.trip_event;
      }
    }

    m.cumulative_revenue.push_back(revenue);
    m.ticks_run = tick + 1;
    if (tick % cfg.snapshot_every == 0 || tick + 1 == cfg.horizon) snapshot(tick);

    if (source.exhausted() && open.empty() &&
        std::all_of(agents.begin(), agents.end(),
                    [](const SimAgent& a) { return a.status == Status::kIdle; }) &&
        tick + 1 < cfg.horizon) {
      m.ended_early = true;
      snapshot(tick);
      break;
    }
  }
  return m;
}

// --- sweeps ------------------------------------------------------------------------

namespace {

SimConfig normalized(SimConfig cfg, const std::vector<SweepDim>& dims) {
  cfg.policy = Policy::kDistributedSarsa;
  for (SweepDim d : dims) {
    switch (d) {
      case SweepDim::kPolicy:
        break;
      case SweepDim::kNAgents:
        cfg.n_agents = 0;
        break;
      case SweepDim::kRComm:
        cfg.game.r_comm = 0.0;
        break;
      case SweepDim::kSeed:
        cfg.seed = 0;
        break;
    }
  }
  return cfg;
}

std::string point_label(const SimConfig& cfg) {
  return fmt::format("n_agents={} r_comm={} seed={}", cfg.n_agents, cfg.game.r_comm, cfg.seed);
}

void check_dims(const std::vector<SimConfig>& cfgs, const std::vector<SweepDim>& dims) {
  if (cfgs.empty()) return;
  const std::string base = canonical_config(normalized(cfgs.front(), dims));
  for (const auto& c : cfgs) {
    if (canonical_config(normalized(c, dims)) != base) {
      throw InputError("configs differ outside the declared sweep dimensions");
    }
  }
}

}  // namespace

std::vector<ComparisonRow> compare_metrics(const std::vector<SimConfig>& numerators,
                                           const std::vector<RunMetrics>& num_metrics,
                                           const std::vector<SimConfig>& denominators,
                                           const std::vector<RunMetrics>& den_metrics,
                                           const std::vector<SweepDim>& dims) {
  if (numerators.size() != num_metrics.size() || denominators.size() != den_metrics.size()) {
    throw InputError("one metrics record per config required");
  }
  std::vector<SimConfig> all = numerators;
  all.insert(all.end(), denominators.begin(), denominators.end());
  check_dims(all, dims);

  // Match on everything except the policy.
  std::vector<SweepDim> policy_only{SweepDim::kPolicy};
  std::map<std::string, std::size_t> by_key;
  for (std::size_t k = 0; k < denominators.size(); ++k) {
    by_key.emplace(canonical_config(normalized(denominators[k], policy_only)), k);
  }
  std::vector<ComparisonRow> rows;
  for (std::size_t k = 0; k < numerators.size(); ++k) {
    auto it = by_key.find(canonical_config(normalized(numerators[k], policy_only)));
    if (it == by_key.end()) {
      throw InputError(fmt::format("no matched-seed denominator for {}", point_label(numerators[k])));
    }
    ComparisonRow row;
    row.point = point_label(numerators[k]);
    row.n_agents = numerators[k].n_agents;
    row.r_comm = numerators[k].game.r_comm;
    row.seed = numerators[k].seed;
    row.numerator = num_metrics[k].total_revenue();
    row.denominator = den_metrics[it->second].total_revenue();
    if (row.denominator != 0.0) {
      row.ratio = row.numerator / row.denominator;
    } else {
      row.ratio = row.numerator == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ComparisonRow> compare_runs(const std::vector<SimConfig>& numerators,
                                        const std::vector<SimConfig>& denominators,
                                        const std::vector<SweepDim>& dims) {
  std::vector<SimConfig> all = numerators;
  all.insert(all.end(), denominators.begin(), denominators.end());
  check_dims(all, dims);
  std::vector<RunMetrics> metrics(all.size());
  parallel_for(all.size(), [&](std::size_t k) { metrics[k] = run(all[k]); });
  std::vector<RunMetrics> num(metrics.begin(), metrics.begin() + static_cast<std::ptrdiff_t>(numerators.size()));
  std::vector<RunMetrics> den(metrics.begin() + static_cast<std::ptrdiff_t>(numerators.size()), metrics.end());
  return compare_metrics(numerators, num, denominators, den, dims);
}

std::vector<ComparisonRow> run_sweep(const SweepSpec& spec) {
  const std::vector<std::uint64_t> seeds = spec.seeds.empty() ? std::vector{spec.base.seed} : spec.seeds;
  const std::vector<std::size_t> sizes = spec.n_agents.empty() ? std::vector{spec.base.n_agents} : spec.n_agents;
  const std::vector<double> radii = spec.r_comm.empty() ? std::vector{spec.base.game.r_comm} : spec.r_comm;
  std::vector<SimConfig> num, den;
  for (std::size_t n : sizes) {
    for (double r : radii) {
      for (std::uint64_t seed : seeds) {
        SimConfig c = spec.base;
        c.n_agents = n;
        c.game.r_comm = r;
        c.seed = seed;
        c.policy = spec.numerator;
        num.push_back(c);
        c.policy = spec.denominator;
        den.push_back(c);
      }
    }
  }
  return compare_runs(num, den,
                      {SweepDim::kPolicy, SweepDim::kNAgents, SweepDim::kRComm, SweepDim::kSeed});
}

}  // namespace fleetrl
