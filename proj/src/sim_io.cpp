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

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fleetrl/config.hpp"
#include "fleetrl/sim.hpp"

namespace fleetrl {

namespace {

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
  return out;
}

}  // namespace

std::string canonical_config(const SimConfig& cfg) {
  // nlohmann::json objects keep keys sorted, so dump() is canonical.
  return sim_config_to_json(cfg).dump();
}

std::string run_dir_name(const SimConfig& cfg) {
  return fmt::format("{:016x}-{}", fnv1a(canonical_config(cfg)), cfg.seed);
}

std::string summary_json(const SimConfig& cfg, const RunMetrics& m) {
  nlohmann::json j;
  j["policy"] = std::string(policy_name(cfg.policy));
  j["seed"] = cfg.seed;
  j["n_agents"] = cfg.n_agents;
  j["ticks_run"] = m.ticks_run;
  j["ended_early"] = m.ended_early;
  j["total_revenue"] = m.total_revenue();
  j["requests"] = m.requests;
  j["served"] = m.served;
  j["expired"] = m.expired;
  j["completed_trips"] = m.trips.size();
  j["mean_trip_return"] =
      m.trips.empty() ? 0.0 : m.total_revenue() / static_cast<double>(m.trips.size());
  j["learning_updates"] = m.learning_updates;
  j["assignment"] = {{"games", m.assignment.games},
                     {"rounds", m.assignment.rounds},
                     {"non_converged", m.assignment.non_converged}};
  j["r_max"] = m.r_max;
  j["dr_max"] = m.dr_max;
  j["max_sigma"] = m.max_sigma;
  j["disconnected_ticks"] = m.disconnected_ticks;
  j["final_disagreement"] = m.disagreement.empty() ? 0.0 : m.disagreement.back().second;
  j["config_hash"] = run_dir_name(cfg);
  return j.dump(2) + "\n";
}

void export_metrics(const std::filesystem::path& dir, const SimConfig& cfg, const RunMetrics& m) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "revenue.csv");
    out << "tick,cumulative_revenue\n";
    for (std::size_t t = 0; t < m.cumulative_revenue.size(); ++t) {
      out << fmt::format("{},{}\n", t, m.cumulative_revenue[t]);
    }
  }
  {
    auto out = open_out(dir / "trips.csv");
    out << "tick,agent,request,fare\n";
    for (const auto& t : m.trips) out << fmt::format("{},{},{},{}\n", t.tick, t.agent, t.request, t.fare);
  }
  {
    auto out = open_out(dir / "disagreement.csv");
    out << "tick,disagreement\n";
    for (const auto& [t, d] : m.disagreement) out << fmt::format("{},{}\n", t, d);
  }
  {
    auto out = open_out(dir / "q_trace.csv");
    out << "tick,state,destination,agent,value\n";
    for (const auto& s : m.snapshots) {
      const auto& [state, dest] = cfg.tracked_pairs[s.pair];
      for (std::size_t a = 0; a < s.values.size(); ++a) {
        out << fmt::format("{},{},{},{},{}\n", s.tick, state.value(), dest.value(), a, s.values[a]);
      }
      if (s.centralized) {
        out << fmt::format("{},{},{},centralized,{}\n", s.tick, state.value(), dest.value(),
                           *s.centralized);
      }
    }
  }
  if (!m.learning.empty()) {
    auto out = open_out(dir / "learning.csv");
    out << "tick,agent,pair,r,alpha,disagreement\n";
    for (const auto& l : m.learning) {
      out << fmt::format("{},{},{},{},{},{}\n", l.tick, l.update.agent, l.update.pair, l.update.r,
                         l.update.alpha, l.disagreement);
    }
  }
  auto out = open_out(dir / "summary.json");
  out << summary_json(cfg, m);
}

void export_comparison(const std::filesystem::path& path, const std::vector<ComparisonRow>& rows) {
  auto out = open_out(path);
  out << "n_agents,r_comm,seed,numerator,denominator,ratio\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{},{},{}\n", r.n_agents, r.r_comm, r.seed, r.numerator,
                       r.denominator, r.ratio);
  }
}

}  // namespace fleetrl
