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

// Command-line front end over the C interface.
//
//   fleetrl estimate      --trips trips.csv --config estimate.json --out dir
//   fleetrl solve         --model demand.json [--gamma 0.8] --out dir
//   fleetrl simulate      --config sim.json [--seed n] --out dir
//   fleetrl sweep         --config sweep.json --out dir
//   fleetrl verify-bounds [--config bounds.json] [--epsilon ... --r-inf ...]
//   fleetrl assign        --config instance.json [--seed n] --out dir
//
// Exit codes: 0 success, 1 internal error, 2 user or input error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fleetrl/fleetrl.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUser = 2;

// Raised for problems detected by the CLI itself.
struct UsageError {
  std::string message;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool verbose = false;
};

void check(fleetrl_status status) {
  if (status != FLEETRL_OK) throw status;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError{fmt::format("cannot open '{}'", path)};
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw UsageError{fmt::format("'{}' is not valid JSON: {}", path, e.what())};
  }
}

// Creates the output directory, refusing to write into a non-empty one.
fs::path prepare_out(const std::string& out) {
  if (out.empty()) throw UsageError{"--out is required"};
  const fs::path dir(out);
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw UsageError{fmt::format("'{}' is not a directory", out)};
    if (!fs::is_empty(dir)) throw UsageError{fmt::format("output directory '{}' is not empty", out)};
  } else {
    fs::create_directories(dir);
  }
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& subcommand, const Common& c) {
  json m;
  m["subcommand"] = subcommand;
  m["config"] = c.config;
  m["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  m["out"] = c.out;
  m["version"] = fleetrl_version();
  std::ofstream(dir / "manifest.json") << m.dump(2) << "\n";
}

int cmd_estimate(const Common& c, const std::string& trips) {
  if (trips.empty()) throw UsageError{"--trips is required"};
  const std::string cfg = c.config.empty() ? std::string("{}") : read_text(c.config);
  fleetrl_demand* demand = nullptr;
  fleetrl_ingest_stats stats{};
  check(fleetrl_demand_estimate(trips.c_str(), cfg.c_str(), &demand, &stats));
  std::unique_ptr<fleetrl_demand, decltype(&fleetrl_demand_free)> guard(demand, fleetrl_demand_free);
  const fs::path dir = prepare_out(c.out);
  check(fleetrl_demand_save(demand, (dir / "demand.json").string().c_str()));
  json summary = {{"rows", stats.rows},
                  {"accepted", stats.accepted},
                  {"rejected", stats.rejected},
                  {"high_rejection", stats.high_rejection != 0},
                  {"n_cells", fleetrl_demand_n_cells(demand)}};
  std::ofstream(dir / "ingest.json") << summary.dump(2) << "\n";
  write_manifest(dir, "estimate", c);
  fmt::print("rows={} accepted={} rejected={}\n", stats.rows, stats.accepted, stats.rejected);
  if (stats.high_rejection) fmt::print(stderr, "warning: more than half of the rows were rejected\n");
  return kExitOk;
}

int cmd_solve(const Common& c, const std::string& model, double gamma) {
  if (model.empty()) throw UsageError{"--model is required"};
  int sweeps = 0;
  double tol = 0.0;
  if (!c.config.empty()) {
    const json cfg = read_json(c.config);
    gamma = cfg.value("gamma", gamma);
    sweeps = cfg.value("eval_sweeps", sweeps);
    tol = cfg.value("tol", tol);
  }
  fleetrl_demand* demand = nullptr;
  check(fleetrl_demand_load(model.c_str(), &demand));
  std::unique_ptr<fleetrl_demand, decltype(&fleetrl_demand_free)> dguard(demand, fleetrl_demand_free);
  fleetrl_solution* sol = nullptr;
  check(fleetrl_solve(demand, gamma, sweeps, tol, &sol));
  std::unique_ptr<fleetrl_solution, decltype(&fleetrl_solution_free)> sguard(sol, fleetrl_solution_free);
  const fs::path dir = prepare_out(c.out);
  check(fleetrl_solution_save(sol, (dir / "solution.json").string().c_str()));
  write_manifest(dir, "solve", c);
  fmt::print("cells={} residual={:.3g}\n", fleetrl_solution_n_cells(sol), fleetrl_solution_residual(sol));
  return kExitOk;
}

using RunPtr = std::unique_ptr<fleetrl_run, decltype(&fleetrl_run_free)>;

RunPtr simulate(const json& cfg, std::optional<std::uint64_t> seed) {
  fleetrl_sim_config* sc = nullptr;
  check(fleetrl_sim_config_parse(cfg.dump().c_str(), &sc));
  std::unique_ptr<fleetrl_sim_config, decltype(&fleetrl_sim_config_free)> cguard(sc, fleetrl_sim_config_free);
  if (seed) fleetrl_sim_config_set_seed(sc, *seed);
  fleetrl_run* run = nullptr;
  check(fleetrl_simulate(sc, &run));
  return RunPtr(run, fleetrl_run_free);
}

std::string run_summary(const fleetrl_run* run) {
  std::string s(fleetrl_run_summary(run, nullptr, 0) + 1, '\0');
  fleetrl_run_summary(run, s.data(), s.size());
  s.pop_back();
  return s;
}

int cmd_simulate(const Common& c) {
  if (c.config.empty()) throw UsageError{"--config is required"};
  const RunPtr run = simulate(read_json(c.config), c.seed);
  const fs::path dir = prepare_out(c.out);
  std::string name(fleetrl_run_dir_name(run.get(), nullptr, 0) + 1, '\0');
  fleetrl_run_dir_name(run.get(), name.data(), name.size());
  name.pop_back();
  check(fleetrl_run_export(run.get(), (dir / name).string().c_str()));
  write_manifest(dir, "simulate", c);
  fmt::print("run={} revenue={:.2f} ticks={}\n", name, fleetrl_run_total_revenue(run.get()),
             fleetrl_run_ticks(run.get()));
  if (c.verbose) std::cout << run_summary(run.get());
  return kExitOk;
}

int cmd_sweep(const Common& c) {
  if (c.config.empty()) throw UsageError{"--config is required"};
  json spec = read_json(c.config);
  if (c.seed) spec["seeds"] = {*c.seed};
  fleetrl_sweep* sweep = nullptr;
  check(fleetrl_sweep_run(spec.dump().c_str(), &sweep));
  std::unique_ptr<fleetrl_sweep, decltype(&fleetrl_sweep_free)> guard(sweep, fleetrl_sweep_free);
  const fs::path dir = prepare_out(c.out);
  check(fleetrl_sweep_export(sweep, dir.string().c_str()));
  write_manifest(dir, "sweep", c);
  for (std::size_t k = 0; k < fleetrl_sweep_size(sweep); ++k) {
    fleetrl_sweep_row row{};
    check(fleetrl_sweep_row_at(sweep, k, &row));
    fmt::print("n_agents={} r_comm={} seed={} ratio={:.4f}\n", row.n_agents, row.r_comm, row.seed,
               row.ratio);
  }
  return kExitOk;
}

struct BoundsFlags {
  std::optional<double> epsilon, delta, gamma, r_inf, r_max, dr_max;
  std::string schedule;
};

void print_tracking(const fleetrl_tracking_bounds& b) {
  if (b.infinite) {
    fmt::print("warning: max second singular value is 1; tracking bounds are infinite\n");
  }
  fmt::print("max_sigma = {:.6g}\n", b.max_sigma);
  fmt::print("delta_Q = {:.6g}\n", b.delta_q);
  fmt::print("delta_omega = {:.6g}\n", b.delta_omega);
  if (!b.periodically_connected) fmt::print("warning: some communication graphs are disconnected\n");
}

int cmd_verify_bounds(const Common& c, BoundsFlags f) {
  json cfg = c.config.empty() ? json::object() : read_json(c.config);
  const json k = cfg.value("kappa", json::object());
  auto pick = [](std::optional<double> flag, const json& j, const char* key) -> std::optional<double> {
    if (flag) return flag;
    if (j.contains(key)) return j.at(key).get<double>();
    return std::nullopt;
  };
  const auto eps = pick(f.epsilon, k, "epsilon");
  const auto delta = pick(f.delta, k, "delta");
  const auto gamma = pick(f.gamma, k, "gamma");
  const auto r_inf = pick(f.r_inf, k, "r_inf");
  const auto r_max = pick(f.r_max, cfg, "r_max");
  const auto dr_max = pick(f.dr_max, cfg, "dr_max");
  if (f.schedule.empty()) f.schedule = cfg.value("schedule", std::string());

  bool did_something = false;
  json report = json::object();
  if (eps || delta || gamma || r_inf) {
    if (!(eps && delta && gamma && r_inf)) {
      throw UsageError{"the kappa bound needs epsilon, delta, gamma and r_inf"};
    }
    double d = 0.0, kappa = 0.0;
    check(fleetrl_kappa_bound(*eps, *delta, *gamma, *r_inf, &d, &kappa));
    fmt::print("d = {:.1f}\nkappa = {:.0f}\n", d, kappa);
    report["d"] = d;
    report["kappa"] = kappa;
    did_something = true;
  }
  fleetrl_tracking_bounds b{};
  bool have_tracking = false;
  if (!f.schedule.empty()) {
    check(fleetrl_schedule_bounds(f.schedule.c_str(), r_max.value_or(1.0), dr_max.value_or(1.0), &b));
    have_tracking = true;
  } else if (cfg.contains("simulation")) {
    const RunPtr run = simulate(cfg.at("simulation"), c.seed);
    check(fleetrl_run_bounds(run.get(), r_max.value_or(-1.0), dr_max.value_or(-1.0), &b));
    have_tracking = true;
  }
  if (have_tracking) {
    print_tracking(b);
    report["delta_Q"] = std::isinf(b.delta_q) ? json("inf") : json(b.delta_q);
    report["delta_omega"] = std::isinf(b.delta_omega) ? json("inf") : json(b.delta_omega);
    report["max_sigma"] = b.max_sigma;
    report["infinite"] = b.infinite != 0;
    did_something = true;
  }
  if (!did_something) throw UsageError{"nothing to verify: give kappa inputs, a schedule or a simulation"};
  if (!c.out.empty()) {
    const fs::path dir = prepare_out(c.out);
    std::ofstream(dir / "bounds.json") << report.dump(2) << "\n";
    write_manifest(dir, "verify-bounds", c);
  }
  return kExitOk;
}

int cmd_assign(const Common& c) {
  if (c.config.empty()) throw UsageError{"--config is required"};
  const std::string text = read_text(c.config);
  fleetrl_assignment* a = nullptr;
  check(fleetrl_assign(text.c_str(), c.seed.value_or(0), &a));
  std::unique_ptr<fleetrl_assignment, decltype(&fleetrl_assignment_free)> guard(a, fleetrl_assignment_free);
  for (std::size_t i = 0; i < fleetrl_assignment_size(a); ++i) {
    int64_t t1 = -1, t2 = -1;
    check(fleetrl_assignment_agent(a, i, &t1, &t2));
    if (t1 < 0) {
      fmt::print("agent {}: null\n", i);
    } else if (t2 < 0) {
      fmt::print("agent {}: task {}\n", i, t1);
    } else {
      fmt::print("agent {}: tasks {} + {}\n", i, t1, t2);
    }
  }
  fmt::print("potential = {:.6g} converged = {}\n", fleetrl_assignment_potential(a),
             fleetrl_assignment_converged(a) ? "yes" : "no");
  if (!c.out.empty()) {
    const fs::path dir = prepare_out(c.out);
    check(fleetrl_assignment_export(a, dir.string().c_str()));
    write_manifest(dir, "assign", c);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent taxi fleet learning and dispatch simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fleetrl_version()));

  Common common;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Structured config file (JSON)");
    sub->add_option("--seed", seed, "Random seed; overrides the config");
    sub->add_option("--out", common.out, "Output directory (created; must be empty)");
    sub->add_flag("--verbose", common.verbose, "Print extra detail");
  };

  std::string trips;
  auto* estimate = app.add_subcommand("estimate", "Estimate a demand model from a trip file");
  add_common(estimate);
  estimate->add_option("--trips", trips, "Delimited trip file");

  std::string model;
  double gamma = 0.8;
  auto* solve = app.add_subcommand("solve", "Solve the MDP of a demand model");
  add_common(solve);
  solve->add_option("--model", model, "Demand model file");
  solve->add_option("--gamma", gamma, "Discount factor in (0,1)");

  auto* sim = app.add_subcommand("simulate", "Run one fleet simulation");
  add_common(sim);
  auto* sweep = app.add_subcommand("sweep", "Matched-seed policy comparison");
  add_common(sweep);

  BoundsFlags bounds;
  auto* verify = app.add_subcommand("verify-bounds", "Evaluate the drift and tracking bounds");
  add_common(verify);
  verify->add_option("--epsilon", bounds.epsilon, "Transition drift");
  verify->add_option("--delta", bounds.delta, "Reward drift");
  verify->add_option("--gamma", bounds.gamma, "Discount factor");
  verify->add_option("--r-inf", bounds.r_inf, "Largest absolute reward");
  verify->add_option("--schedule", bounds.schedule, "Graph schedule (tick,row,col,weight)");
  verify->add_option("--r-max", bounds.r_max, "Bound on tracked inputs");
  verify->add_option("--dr-max", bounds.dr_max, "Bound on per-tick input changes");

  auto* assign = app.add_subcommand("assign", "Solve one assignment game instance");
  add_common(assign);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUser;
  }
  for (auto* sub : app.get_subcommands()) {
    if (sub->count("--seed") > 0) common.seed = seed;
  }

  try {
    if (*estimate) return cmd_estimate(common, trips);
    if (*solve) return cmd_solve(common, model, gamma);
    if (*sim) return cmd_simulate(common);
    if (*sweep) return cmd_sweep(common);
    if (*verify) return cmd_verify_bounds(common, bounds);
    if (*assign) return cmd_assign(common);
  } catch (const UsageError& e) {
    fmt::print(stderr, "error: {}\n", e.message);
    return kExitUser;
  } catch (fleetrl_status status) {
    fmt::print(stderr, "error: {}\n", fleetrl_last_error());
    return fleetrl_is_user_error(status) ? kExitUser : kExitInternal;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitUser;
  } catch (const std::exception& e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}
