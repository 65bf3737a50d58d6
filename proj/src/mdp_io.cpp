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
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fleetrl/mdp.hpp"

namespace fleetrl {

using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write {}", path));
  out << text;
  if (!out) throw IoError(fmt::format("write to {} failed", path));
}

json parse_versioned(const std::string& text, int expected, const char* what) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("{} file is not valid JSON: {}", what, e.what()));
  }
  if (!doc.is_object() || !doc.contains("version")) {
    throw InputError(fmt::format("{} file has no version field", what));
  }
  const int version = doc.at("version").get<int>();
  if (version != expected) {
    throw InputError(fmt::format("{} file version {} is not supported (expected {})", what,
                                 version, expected));
  }
  return doc;
}

std::vector<std::vector<CellId>> cells_from_json(const json& rows, std::size_t n_q,
                                                 const char* field) {
  if (!rows.is_array() || rows.size() != n_q) {
    throw InputError(fmt::format("{} must hold {} rows", field, n_q));
  }
  std::vector<std::vector<CellId>> out;
  for (const auto& row : rows) {
    auto& dst = out.emplace_back();
    for (const auto& v : row) dst.push_back(to_cell(v.get<std::size_t>()));
  }
  return out;
}

json cells_to_json(const std::vector<std::vector<CellId>>& rows) {
  json out = json::array();
  for (const auto& row : rows) {
    json r = json::array();
    for (CellId c : row) r.push_back(c.value());
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

std::string serialize_solution(const QTable& q, const RankedPolicy& ranked, double gamma) {
  const auto& index = q.index();
  std::vector<std::vector<CellId>> sets;
  for (std::size_t l = 0; l < index.n_cells(); ++l) {
    const auto a = index.actions(to_cell(l));
    sets.emplace_back(a.begin(), a.end());
  }
  json doc;
  doc["version"] = kQTableFormatVersion;
  doc["n_q"] = index.n_cells();
  doc["gamma"] = gamma;
  doc["index_map"] = cells_to_json(sets);
  doc["values"] = std::vector<double>(q.values().begin(), q.values().end());
  doc["ranked"] = cells_to_json(ranked.ranked);
  return doc.dump(2) + "\n";
}

SavedSolution parse_solution(const std::string& text) {
  const json doc = parse_versioned(text, kQTableFormatVersion, "Q-table");
  try {
    const auto n_q = doc.at("n_q").get<std::size_t>();
    auto index = std::make_shared<const ActionIndex>(
        ActionIndex::from_sets(cells_from_json(doc.at("index_map"), n_q, "index_map")));
    const auto values = doc.at("values").get<std::vector<double>>();
    if (values.size() != index->size()) {
      throw InputError(fmt::format("values has {} entries, index_map needs {}", values.size(),
                                   index->size()));
    }
    SavedSolution saved;
    saved.gamma = doc.at("gamma").get<double>();
    saved.q = QTable(index);
    std::copy(values.begin(), values.end(), saved.q.values().begin());
    if (doc.contains("ranked")) {
      saved.ranked.ranked = cells_from_json(doc.at("ranked"), n_q, "ranked");
    } else {
      saved.ranked = rank_actions(saved.q);
    }
    return saved;
  } catch (const json::exception& e) {
    throw InputError(fmt::format("malformed Q-table file: {}", e.what()));
  }
}

void save_solution(const std::string& path, const QTable& q, const RankedPolicy& ranked,
                   double gamma) {
  write_file(path, serialize_solution(q, ranked, gamma));
}

SavedSolution load_solution(const std::string& path) { return parse_solution(read_file(path)); }

std::string serialize_demand(const DemandModel& dm) {
  auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
  json doc;
  doc["version"] = kDemandFormatVersion;
  doc["n_q"] = dm.n_cells();
  doc["L"] = vec(dm.probabilities());
  doc["D"] = vec(dm.rewards());
  doc["M"] = vec(dm.motions());
  return doc.dump(2) + "\n";
}

DemandModel parse_demand(const std::string& text) {
  const json doc = parse_versioned(text, kDemandFormatVersion, "demand");
  try {
    const auto n_q = doc.at("n_q").get<std::size_t>();
    const auto l = doc.at("L").get<std::vector<double>>();
    const auto d = doc.at("D").get<std::vector<double>>();
    std::vector<double> m(n_q * n_q, 1.0);
    if (doc.contains("M")) m = doc.at("M").get<std::vector<double>>();
    if (l.size() != n_q * n_q || d.size() != n_q * n_q || m.size() != n_q * n_q) {
      throw InputError(fmt::format("demand matrices must have {} entries", n_q * n_q));
    }
    DemandModel dm(n_q);
    for (std::size_t i = 0; i < n_q; ++i) {
      for (std::size_t j = 0; j < n_q; ++j) {
        dm.set_probability(to_cell(i), to_cell(j), l[i * n_q + j]);
        dm.set_reward(to_cell(i), to_cell(j), d[i * n_q + j]);
        dm.set_motion(to_cell(i), to_cell(j), m[i * n_q + j]);
      }
    }
    dm.validate();
    return dm;
  } catch (const json::exception& e) {
    throw InputError(fmt::format("malformed demand file: {}", e.what()));
  }
}

void save_demand(const std::string& path, const DemandModel& dm) {
  write_file(path, serialize_demand(dm));
}

DemandModel load_demand(const std::string& path) { return parse_demand(read_file(path)); }

}  // namespace fleetrl
