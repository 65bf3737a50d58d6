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

#ifndef FLEETRL_SIM_HPP_
#define FLEETRL_SIM_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fleetrl/demand.hpp"
#include "fleetrl/distributed.hpp"
#include "fleetrl/game.hpp"
#include "fleetrl/mdp.hpp"

namespace fleetrl {

enum class Policy {
  kDistributedSarsa,
  kCentralizedSarsa,
  kMdpStatic,
  kGreedy,
  kShortestPath,
};

std::string_view policy_name(Policy policy);
// Accepts the names returned by policy_name. Throws InputError otherwise.
Policy parse_policy(std::string_view name);

struct SimConfig {
  std::size_t n_agents = 10;
  std::int64_t horizon = 1000;
  std::uint64_t seed = 0;
  Policy policy = Policy::kDistributedSarsa;

  // Map and synthetic demand. With trips_file set, requests are replayed
  // from the file instead and only the grid of the scenario is used.
  ScenarioSpec scenario;
  std::string trips_file;
  // Tick of the file's first window; requests replay at start_time - offset.
  std::int64_t trips_tick_offset = 0;

  GameConfig game;
  double gamma = 0.8;
  double zeta = 0.2;
  MpiOptions mpi;
  // Unserved requests expire after this many ticks.
  std::int64_t request_ttl = 5;
  std::int64_t snapshot_every = 10;
  // (state, destination) pairs whose Q values are recorded at snapshots.
  std::vector<std::pair<CellId, CellId>> tracked_pairs;
  // Distributed policy only: also feed every event to a centralized
  // learner, recording its values at the tracked pairs.
  bool shadow_centralized = false;
  // Record one line per learning update.
  bool learning_log = false;

  // Throws InputError or DomainError on invalid values.
  void validate() const;
};

struct TripReturn {
  std::int64_t tick = 0;
  std::size_t agent = 0;
  std::uint64_t request = 0;
  double fare = 0.0;
};

struct QSnapshot {
  std::int64_t tick = 0;
  std::size_t pair = 0;  // index into tracked_pairs
  // Per-agent estimates for the distributed policy, a single entry
  // otherwise.
  std::vector<double> values;
  // Shadow centralized value, when enabled.
  std::optional<double> centralized;
};

struct LearningRecord {
  std::int64_t tick = 0;
  AgentTickRecord update;
  double disagreement = 0.0;
};

struct AssignmentStats {
  std::size_t games = 0;
  std::size_t rounds = 0;
  std::size_t non_converged = 0;
};

struct RunMetrics {
  std::vector<double> cumulative_revenue;  // after each tick
  std::vector<TripReturn> trips;
  std::vector<std::pair<std::int64_t, double>> disagreement;
  std::vector<QSnapshot> snapshots;
  std::vector<LearningRecord> learning;
  AssignmentStats assignment;
  std::size_t requests = 0;
  std::size_t served = 0;
  std::size_t expired = 0;
  std::size_t learning_updates = 0;
  // Observed bounds on the consensus inputs and their per-tick change.
  double r_max = 0.0;
  double dr_max = 0.0;
  // Largest second singular value over the communication graphs and the
  // number of ticks whose graph was disconnected.
  double max_sigma = 0.0;
  std::size_t disconnected_ticks = 0;
  std::int64_t ticks_run = 0;
  bool ended_early = false;

  double total_revenue() const {
    return cumulative_revenue.empty() ? 0.0 : cumulative_revenue.back();
  }
};

// The Q-table used for the warm start: MPI solution of the demand model at
// tick 0 (synthetic) or of the model estimated from the trip file.
struct WarmStart {
  DemandModel demand;
  MpiSolution solution;
};

WarmStart warm_start(const SimConfig& cfg);

RunMetrics run(const SimConfig& cfg);
// Reuses a precomputed warm start (e.g. across policies of one sweep).
RunMetrics run(const SimConfig& cfg, const WarmStart& warm);

// --- sweeps --------------------------------------------------------------------

// Dimensions along which configs of a comparison may differ.
enum class SweepDim { kPolicy, kNAgents, kRComm, kSeed };

struct ComparisonRow {
  std::string point;  // human-readable sweep point
  std::size_t n_agents = 0;
  double r_comm = 0.0;
  std::uint64_t seed = 0;
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio = 0.0;
};

// Pairs numerator and denominator configs that agree on everything but the
// policy, and reports total revenue ratios. Throws InputError if configs
// differ along a dimension outside dims, or if a numerator has no match.
std::vector<ComparisonRow> compare_runs(const std::vector<SimConfig>& numerators,
                                        const std::vector<SimConfig>& denominators,
                                        const std::vector<SweepDim>& dims);

// Same, from already computed metrics (parallel to the config lists).
std::vector<ComparisonRow> compare_metrics(const std::vector<SimConfig>& numerators,
                                           const std::vector<RunMetrics>& num_metrics,
                                           const std::vector<SimConfig>& denominators,
                                           const std::vector<RunMetrics>& den_metrics,
                                           const std::vector<SweepDim>& dims);

// Matched-seed comparison of two policies over a grid of fleet sizes and
// communication radii. Empty lists keep the base value.
struct SweepSpec {
  SimConfig base;
  Policy numerator = Policy::kDistributedSarsa;
  Policy denominator = Policy::kCentralizedSarsa;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> n_agents;
  std::vector<double> r_comm;
};

std::vector<ComparisonRow> run_sweep(const SweepSpec& spec);

// --- export ----------------------------------------------------------------------

// Canonical JSON of a config (stable key order, no whitespace).
std::string canonical_config(const SimConfig& cfg);
// Directory name "<hash>-<seed>" with a 16-hex-digit FNV-1a hash of the
// canonical config.
std::string run_dir_name(const SimConfig& cfg);

// Writes revenue.csv, trips.csv, disagreement.csv, q_trace.csv,
// learning.csv (if recorded) and summary.json under dir.
void export_metrics(const std::filesystem::path& dir, const SimConfig& cfg,
                    const RunMetrics& metrics);
std::string summary_json(const SimConfig& cfg, const RunMetrics& metrics);
// comparison.csv, one line per row.
void export_comparison(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows);

}  // namespace fleetrl

#endif  // FLEETRL_SIM_HPP_
