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

#include "fleetrl/fleetrl.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <random>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fleetrl/config.hpp"
#include "fleetrl/consensus.hpp"
#include "fleetrl/demand.hpp"
#include "fleetrl/game.hpp"
#include "fleetrl/mdp.hpp"
#include "fleetrl/sim.hpp"

struct fleetrl_demand {
  fleetrl::DemandModel model;
};

struct fleetrl_solution {
  fleetrl::QTable q;
  fleetrl::RankedPolicy ranked;
  double gamma = 0.8;
  double residual = 0.0;
};

struct fleetrl_sim_config {
  fleetrl::SimConfig config;
};

struct fleetrl_run {
  fleetrl::SimConfig config;
  fleetrl::RunMetrics metrics;
};

struct fleetrl_sweep {
  std::vector<fleetrl::ComparisonRow> rows;
};

struct fleetrl_assignment {
  fleetrl::GameInstance instance;
  fleetrl::AssignmentResult result;
  std::vector<std::vector<fleetrl::GameAction>> actions;
};

namespace {

thread_local std::string last_error;

fleetrl_status fail(fleetrl_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs body, translating exceptions into status codes.
template <typename F>
fleetrl_status guard(F&& body) {
  try {
    last_error.clear();
    body();
    return FLEETRL_OK;
  } catch (const fleetrl::IngestError& e) {
    return fail(e.row() == 0 ? FLEETRL_ERR_IO : FLEETRL_ERR_INPUT, e.what());
  } catch (const fleetrl::IoError& e) {
    return fail(FLEETRL_ERR_IO, e.what());
  } catch (const fleetrl::DomainError& e) {
    return fail(FLEETRL_ERR_DOMAIN, e.what());
  } catch (const fleetrl::InputError& e) {
    return fail(FLEETRL_ERR_INPUT, e.what());
  } catch (const fleetrl::IndexError& e) {
    return fail(FLEETRL_ERR_INDEX, e.what());
  } catch (const fleetrl::ConvergenceError& e) {
    return fail(FLEETRL_ERR_CONVERGENCE, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(FLEETRL_ERR_INPUT, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(FLEETRL_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(FLEETRL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FLEETRL_ERR_INTERNAL, "unknown error");
  }
}

template <typename T>
void require(const T* p, const char* name) {
  if (p == nullptr) throw fleetrl::InputError(fmt::format("{} must not be NULL", name));
}

size_t copy_out(const std::string& s, char* buf, size_t len) {
  if (buf != nullptr && len > 0) {
    const size_t n = std::min(len - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
  return s.size();
}

fleetrl::ValueFn instance_values(const nlohmann::json& doc, const fleetrl::GameInstance& inst,
                                 std::shared_ptr<void>& keep_alive) {
  using namespace fleetrl;
  const auto utility = doc.value("utility", nlohmann::json::object());
  const std::string kind = utility.value("kind", std::string("greedy"));
  const auto& tasks = inst.tasks;
  const auto& agents = inst.agents;
  const GameConfig cfg = inst.config;
  if (kind == "greedy") {
    return [&tasks, &agents, cfg](std::size_t i, const GameAction& a) {
      return greedy_value(agents[i], a, tasks, cfg);
    };
  }
  if (kind == "shortest-path") {
    return [&tasks, &agents, cfg](std::size_t i, const GameAction& a) {
      return shortest_path_value(agents[i], a, tasks, cfg);
    };
  }
  if (kind == "sarsa") {
    struct Model {
      QTable q;
      DemandModel demand;
      GridGeometry grid;
    };
    auto model = std::make_shared<Model>();
    model->q = load_solution(utility.at("solution").get<std::string>()).q;
    model->demand = load_demand(utility.at("demand").get<std::string>());
    model->grid = grid_from_json(utility.at("grid"));
    keep_alive = model;
    Model* m = model.get();
    return [&tasks, &agents, cfg, m](std::size_t i, const GameAction& a) {
      return task_value(agents[i], a, tasks, m->q, m->demand, m->grid, cfg);
    };
  }
  throw InputError(fmt::format("unknown utility kind '{}'", kind));
}

}  // namespace

extern "C" {

const char* fleetrl_version(void) { return "0.1.0"; }

const char* fleetrl_last_error(void) { return last_error.c_str(); }

int fleetrl_is_user_error(fleetrl_status status) {
  return status == FLEETRL_ERR_INPUT || status == FLEETRL_ERR_DOMAIN ||
         status == FLEETRL_ERR_INDEX || status == FLEETRL_ERR_IO;
}

// --- demand ---

fleetrl_status fleetrl_demand_estimate(const char* trips_path, const char* config_json,
                                       fleetrl_demand** out, fleetrl_ingest_stats* stats) {
  return guard([&] {
    require(trips_path, "trips_path");
    require(out, "out");
    const auto cfg = config_json ? nlohmann::json::parse(config_json) : nlohmann::json::object();
    const auto grid = fleetrl::grid_from_json(cfg.value("grid", nlohmann::json::object()));
    fleetrl::EstimateOptions opts;
    opts.window_ticks = cfg.value("window_ticks", opts.window_ticks);
    opts.max_departure_mass = cfg.value("max_departure_mass", opts.max_departure_mass);
    if (opts.window_ticks < 1) throw fleetrl::DomainError("window_ticks must be at least 1");
    const auto ingested = fleetrl::ingest_trips_file(trips_path, grid);
    auto d = std::make_unique<fleetrl_demand>();
    d->model = fleetrl::estimate_demand(ingested.trips, grid.n_cells(), {}, opts);
    if (stats) {
      stats->rows = ingested.stats.rows;
      stats->accepted = ingested.stats.accepted;
      stats->rejected = ingested.stats.rejected;
      stats->high_rejection = ingested.stats.high_rejection ? 1 : 0;
    }
    *out = d.release();
  });
}

fleetrl_status fleetrl_demand_load(const char* path, fleetrl_demand** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto d = std::make_unique<fleetrl_demand>();
    d->model = fleetrl::load_demand(path);
    *out = d.release();
  });
}

fleetrl_status fleetrl_demand_save(const fleetrl_demand* demand, const char* path) {
  return guard([&] {
    require(demand, "demand");
    require(path, "path");
    fleetrl::save_demand(path, demand->model);
  });
}

size_t fleetrl_demand_n_cells(const fleetrl_demand* demand) {
  return demand ? demand->model.n_cells() : 0;
}

fleetrl_status fleetrl_demand_get(const fleetrl_demand* demand, size_t from, size_t to,
                                  double* probability, double* reward) {
  return guard([&] {
    require(demand, "demand");
    const std::size_t n = demand->model.n_cells();
    if (from >= n || to >= n) throw fleetrl::IndexError(fmt::format("cell pair {},{} outside a {}-cell model", from, to, n));
    if (probability) *probability = demand->model.probability(fleetrl::to_cell(from), fleetrl::to_cell(to));
    if (reward) *reward = demand->model.reward(fleetrl::to_cell(from), fleetrl::to_cell(to));
  });
}

void fleetrl_demand_free(fleetrl_demand* demand) { delete demand; }

// --- solutions ---

fleetrl_status fleetrl_solve(const fleetrl_demand* demand, double gamma, int eval_sweeps,
                             double tol, fleetrl_solution** out) {
  return guard([&] {
    require(demand, "demand");
    require(out, "out");
    fleetrl::MpiOptions opts;
    if (eval_sweeps > 0) opts.eval_sweeps = eval_sweeps;
    if (tol > 0.0) opts.tol = tol;
    auto sol = fleetrl::solve_mpi(fleetrl::build_mdp(demand->model, gamma), opts);
    auto s = std::make_unique<fleetrl_solution>();
    s->q = std::move(sol.q);
    s->ranked = std::move(sol.ranked);
    s->gamma = gamma;
    s->residual = sol.residual;
    *out = s.release();
  });
}

fleetrl_status fleetrl_solution_load(const char* path, fleetrl_solution** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto saved = fleetrl::load_solution(path);
    auto s = std::make_unique<fleetrl_solution>();
    s->q = std::move(saved.q);
    s->ranked = std::move(saved.ranked);
    s->gamma = saved.gamma;
    *out = s.release();
  });
}

fleetrl_status fleetrl_solution_save(const fleetrl_solution* solution, const char* path) {
  return guard([&] {
    require(solution, "solution");
    require(path, "path");
    fleetrl::save_solution(path, solution->q, solution->ranked, solution->gamma);
  });
}

fleetrl_status fleetrl_solution_q(const fleetrl_solution* solution, size_t state,
                                  size_t destination, double* value) {
  return guard([&] {
    require(solution, "solution");
    require(value, "value");
    *value = solution->q.at(fleetrl::to_cell(state), fleetrl::to_cell(destination));
  });
}

fleetrl_status fleetrl_solution_ranked(const fleetrl_solution* solution, size_t state,
                                       size_t rank, size_t* destination) {
  return guard([&] {
    require(solution, "solution");
    require(destination, "destination");
    if (state >= solution->ranked.ranked.size() || rank >= solution->ranked.ranked[state].size()) {
      throw fleetrl::IndexError(fmt::format("no rank {} for state {}", rank, state));
    }
    *destination = solution->ranked.ranked[state][rank].value();
  });
}

size_t fleetrl_solution_n_cells(const fleetrl_solution* solution) {
  return solution ? solution->q.index().n_cells() : 0;
}

double fleetrl_solution_residual(const fleetrl_solution* solution) {
  return solution ? solution->residual : 0.0;
}

void fleetrl_solution_free(fleetrl_solution* solution) { delete solution; }

// --- simulation ---

fleetrl_status fleetrl_sim_config_load(const char* path, fleetrl_sim_config** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto c = std::make_unique<fleetrl_sim_config>();
    c->config = fleetrl::load_sim_config(path);
    *out = c.release();
  });
}

fleetrl_status fleetrl_sim_config_parse(const char* json, fleetrl_sim_config** out) {
  return guard([&] {
    require(json, "json");
    require(out, "out");
    auto c = std::make_unique<fleetrl_sim_config>();
    c->config = fleetrl::sim_config_from_json(nlohmann::json::parse(json));
    *out = c.release();
  });
}

void fleetrl_sim_config_set_seed(fleetrl_sim_config* config, uint64_t seed) {
  if (config) config->config.seed = seed;
}

void fleetrl_sim_config_free(fleetrl_sim_config* config) { delete config; }

fleetrl_status fleetrl_simulate(const fleetrl_sim_config* config, fleetrl_run** out) {
  return guard([&] {
    require(config, "config");
    require(out, "out");
    auto r = std::make_unique<fleetrl_run>();
    r->config = config->config;
    r->metrics = fleetrl::run(r->config);
    *out = r.release();
  });
}

double fleetrl_run_total_revenue(const fleetrl_run* run) {
  return run ? run->metrics.total_revenue() : 0.0;
}

int64_t fleetrl_run_ticks(const fleetrl_run* run) { return run ? run->metrics.ticks_run : 0; }

size_t fleetrl_run_dir_name(const fleetrl_run* run, char* buf, size_t len) {
  return run ? copy_out(fleetrl::run_dir_name(run->config), buf, len) : 0;
}

size_t fleetrl_run_summary(const fleetrl_run* run, char* buf, size_t len) {
  return run ? copy_out(fleetrl::summary_json(run->config, run->metrics), buf, len) : 0;
}

fleetrl_status fleetrl_run_export(const fleetrl_run* run, const char* dir) {
  return guard([&] {
    require(run, "run");
    require(dir, "dir");
    fleetrl::export_metrics(dir, run->config, run->metrics);
  });
}

void fleetrl_run_free(fleetrl_run* run) { delete run; }

// --- sweeps ---

fleetrl_status fleetrl_sweep_run(const char* json, fleetrl_sweep** out) {
  return guard([&] {
    require(json, "json");
    require(out, "out");
    const auto spec = fleetrl::sweep_from_json(nlohmann::json::parse(json));
    auto s = std::make_unique<fleetrl_sweep>();
    s->rows = fleetrl::run_sweep(spec);
    *out = s.release();
  });
}

size_t fleetrl_sweep_size(const fleetrl_sweep* sweep) { return sweep ? sweep->rows.size() : 0; }

fleetrl_status fleetrl_sweep_row_at(const fleetrl_sweep* sweep, size_t k, fleetrl_sweep_row* row) {
  return guard([&] {
    require(sweep, "sweep");
    require(row, "row");
    if (k >= sweep->rows.size()) throw fleetrl::IndexError(fmt::format("sweep row {} out of range", k));
    const auto& r = sweep->rows[k];
    *row = {r.n_agents, r.r_comm, r.seed, r.numerator, r.denominator, r.ratio};
  });
}

fleetrl_status fleetrl_sweep_export(const fleetrl_sweep* sweep, const char* dir) {
  return guard([&] {
    require(sweep, "sweep");
    require(dir, "dir");
    std::filesystem::create_directories(dir);
    fleetrl::export_comparison(std::filesystem::path(dir) / "comparison.csv", sweep->rows);
  });
}

void fleetrl_sweep_free(fleetrl_sweep* sweep) { delete sweep; }

// --- bounds ---

fleetrl_status fleetrl_kappa_bound(double epsilon, double delta, double gamma, double r_inf,
                                   double* d, double* kappa) {
  return guard([&] {
    const auto b = fleetrl::kappa_bound(epsilon, delta, gamma, r_inf);
    if (d) *d = b.d;
    if (kappa) *kappa = b.kappa;
  });
}

fleetrl_status fleetrl_schedule_bounds(const char* schedule_path, double r_max, double dr_max,
                                       fleetrl_tracking_bounds* out) {
  return guard([&] {
    require(schedule_path, "schedule_path");
    require(out, "out");
    const auto graphs = fleetrl::read_schedule_file(schedule_path);
    const auto b = fleetrl::error_bounds(graphs, r_max, dr_max);
    *out = {b.delta_q, b.delta_omega, b.max_sigma, b.infinite ? 1 : 0,
            fleetrl::check_periodic_connectivity(graphs, 1) ? 1 : 0};
  });
}

fleetrl_status fleetrl_run_bounds(const fleetrl_run* run, double r_max, double dr_max,
                                  fleetrl_tracking_bounds* out) {
  return guard([&] {
    require(run, "run");
    require(out, "out");
    const auto& m = run->metrics;
    const auto b = fleetrl::error_bounds_from_sigma(run->config.n_agents, m.max_sigma,
                                                    r_max < 0.0 ? m.r_max : r_max,
                                                    dr_max < 0.0 ? m.dr_max : dr_max);
    *out = {b.delta_q, b.delta_omega, b.max_sigma, b.infinite ? 1 : 0,
            m.disconnected_ticks == 0 ? 1 : 0};
  });
}

// --- assignment ---

fleetrl_status fleetrl_assign(const char* instance_json, uint64_t seed, fleetrl_assignment** out) {
  return guard([&] {
    require(instance_json, "instance_json");
    require(out, "out");
    const auto doc = nlohmann::json::parse(instance_json);
    auto a = std::make_unique<fleetrl_assignment>();
    a->instance = fleetrl::parse_instance(instance_json);
    std::shared_ptr<void> keep_alive;
    const auto values = instance_values(doc, a->instance, keep_alive);
    const fleetrl::Game game(a->instance.agents, a->instance.tasks, a->instance.config, values);
    std::mt19937_64 rng(seed);
    a->result = fleetrl::run_assignment(game, a->instance.config.tau, rng);
    for (std::size_t i = 0; i < game.n_agents(); ++i) {
      const auto acts = game.actions(i);
      a->actions.emplace_back(acts.begin(), acts.end());
    }
    *out = a.release();
  });
}

size_t fleetrl_assignment_size(const fleetrl_assignment* a) {
  return a ? a->result.profile.size() : 0;
}

fleetrl_status fleetrl_assignment_agent(const fleetrl_assignment* a, size_t agent,
                                        int64_t* first_task, int64_t* second_task) {
  return guard([&] {
    require(a, "assignment");
    if (agent >= a->result.profile.size()) {
      throw fleetrl::IndexError(fmt::format("agent {} out of range", agent));
    }
    const auto& act = a->actions[agent][a->result.profile[agent]];
    const auto& tasks = a->instance.tasks;
    const int64_t none = -1;
    if (first_task) *first_task = act.task_count() >= 1 ? static_cast<int64_t>(tasks[act.first].id) : none;
    if (second_task) *second_task = act.task_count() == 2 ? static_cast<int64_t>(tasks[act.second].id) : none;
  });
}

double fleetrl_assignment_potential(const fleetrl_assignment* a) {
  return a ? a->result.potential : 0.0;
}

int fleetrl_assignment_converged(const fleetrl_assignment* a) {
  return a && a->result.converged ? 1 : 0;
}

fleetrl_status fleetrl_assignment_export(const fleetrl_assignment* a, const char* dir) {
  return guard([&] {
    require(a, "assignment");
    require(dir, "dir");
    const std::filesystem::path root(dir);
    std::filesystem::create_directories(root);
    {
      std::ofstream out(root / "potential_trace.csv");
      if (!out) throw fleetrl::IoError(fmt::format("cannot write {}", (root / "potential_trace.csv").string()));
      fleetrl::write_potential_trace(out, a->result.potential_trace);
    }
    nlohmann::json doc;
    doc["potential"] = a->result.potential;
    doc["converged"] = a->result.converged;
    doc["rounds"] = a->result.rounds;
    doc["assignment"] = nlohmann::json::array();
    for (std::size_t i = 0; i < a->result.profile.size(); ++i) {
      const auto& act = a->actions[i][a->result.profile[i]];
      nlohmann::json ids = nlohmann::json::array();
      if (act.task_count() >= 1) ids.push_back(a->instance.tasks[act.first].id);
      if (act.task_count() == 2) ids.push_back(a->instance.tasks[act.second].id);
      doc["assignment"].push_back(ids);
    }
    std::ofstream out(root / "assignment.json");
    if (!out) throw fleetrl::IoError(fmt::format("cannot write {}", (root / "assignment.json").string()));
    out << doc.dump(2) << "\n";
  });
}

void fleetrl_assignment_free(fleetrl_assignment* a) { delete a; }

}  // extern "C"
