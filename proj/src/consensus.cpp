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

#include "fleetrl/consensus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>

#include <fmt/format.h>

namespace fleetrl {

double CommGraph::min_edge_weight() const {
  double best = 0.0;
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    for (std::size_t k : neighbors[i]) {
      const double w = weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (best == 0.0 || w < best) best = w;
    }
  }
  return best;
}

bool CommGraph::doubly_stochastic(double tol) const {
  if (weights.rows() == 0) return true;
  if ((weights.array() < 0.0).any()) return false;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(weights.rows());
  return (weights * ones - ones).cwiseAbs().maxCoeff() <= tol &&
         (weights.transpose() * ones - ones).cwiseAbs().maxCoeff() <= tol;
}

CommGraph graph_from_weights(Eigen::MatrixXd weights) {
  if (weights.rows() != weights.cols()) throw InputError("weight matrix must be square");
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw InputError("weight matrix must be finite and nonnegative");
  }
  CommGraph g;
  g.weights = std::move(weights);
  if (!g.doubly_stochastic(1e-9)) {
    throw InputError("weight matrix rows and columns must each sum to 1");
  }
  const auto n = static_cast<std::size_t>(g.weights.rows());
  g.neighbors.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i && g.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) > 0.0) {
        g.neighbors[i].push_back(k);
      }
    }
  }
  return g;
}

CommGraph build_graph(std::span<const Point> positions, double r_comm) {
  if (!(r_comm > 0.0)) throw DomainError(fmt::format("R_comm {} must be positive", r_comm));
  const std::size_t n = positions.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i + 1; k < n; ++k) {
      if (distance(positions[i], positions[k]) <= r_comm) {
        adj[i].push_back(k);
        adj[k].push_back(i);
      }
    }
  }
  CommGraph g;
  g.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(adj[i].begin(), adj[i].end());
    double off = 0.0;
    for (std::size_t k : adj[i]) {
      const double w = 1.0 / (1.0 + static_cast<double>(std::max(adj[i].size(), adj[k].size())));
      g.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = w;
      off += w;
    }
    g.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0 - off;
  }
  g.neighbors = std::move(adj);
  return g;
}

void track_step(std::span<const std::span<double>> states, const CommGraph& graph,
                std::span<const SparseVector> inputs) {
  const std::size_t n = states.size();
  if (graph.n_agents() != n || inputs.size() != n) {
    throw InputError(fmt::format("track_step: {} states, {}-agent graph, {} inputs", n,
                                 graph.n_agents(), inputs.size()));
  }
  if (n == 0) return;
  const std::size_t dim = states[0].size();
  for (std::size_t i = 0; i < n; ++i) {
    if (states[i].size() != dim) throw InputError("track_step: state dimensions differ");
    for (const auto& e : inputs[i]) {
      if (e.index >= dim) throw InputError(fmt::format("track_step: input index {} >= {}", e.index, dim));
    }
  }
  // Consensus terms are computed from the pre-round states, then written.
  std::vector<std::vector<double>> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nbrs = graph.neighbors[i];
    if (nbrs.empty()) continue;
    const std::span<const double> xi = states[i];
    auto& out = next[i];
    out.assign(xi.begin(), xi.end());
    for (std::size_t k : nbrs) {
      const double w = graph.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      const std::span<const double> xk = states[k];
      for (std::size_t d = 0; d < dim; ++d) out[d] += w * (xk[d] - xi[d]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::span<double> x = states[i];
    if (!graph.neighbors[i].empty()) std::copy(next[i].begin(), next[i].end(), x.begin());
    for (const auto& e : inputs[i]) x[e.index] += e.value;
  }
}

void track_step(TrackerState& ts, const CommGraph& graph, std::span<const SparseVector> inputs) {
  std::vector<std::span<double>> spans(ts.x.begin(), ts.x.end());
  track_step(spans, graph, inputs);
}

double second_singular_value(const Eigen::MatrixXd& weights) {
  if (weights.rows() < 2) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(weights);
  return svd.singularValues()(1);
}

ErrorBounds error_bounds_from_sigma(std::size_t n_agents, double max_sigma, double r_max,
                                    double dr_max) {
  if (!(r_max >= 0.0) || !(dr_max >= 0.0)) throw DomainError("r_max and dr_max must be >= 0");
  ErrorBounds b;
  b.max_sigma = max_sigma;
  const double gap = 1.0 - max_sigma;
  const double scale = 2.0 * std::sqrt(static_cast<double>(n_agents));
  if (gap <= 1e-12) {
    b.infinite = true;
    b.delta_q = r_max == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    b.delta_omega = dr_max == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return b;
  }
  b.delta_q = scale * r_max / gap;
  b.delta_omega = scale * dr_max / gap;
  return b;
}

ErrorBounds error_bounds(std::span<const CommGraph> graphs, double r_max, double dr_max) {
  if (graphs.empty()) throw InputError("error_bounds needs at least one graph");
  double sigma = 0.0;
  for (const auto& g : graphs) sigma = std::max(sigma, second_singular_value(g.weights));
  return error_bounds_from_sigma(graphs.front().n_agents(), sigma, r_max, dr_max);
}

namespace {

bool reaches_all(const std::vector<std::vector<std::size_t>>& adj) {
  const std::size_t n = adj.size();
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (std::size_t v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        stack.push_back(v);
      }
    }
  }
  return count == n;
}

bool union_strongly_connected(std::span<const CommGraph> window) {
  const std::size_t n = window.front().n_agents();
  if (n <= 1) return true;
  std::vector<std::vector<std::size_t>> fwd(n), rev(n);
  for (const auto& g : window) {
    if (g.n_agents() != n) throw InputError("graph sequence changes agent count");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k : g.neighbors[i]) {
        fwd[i].push_back(k);
        rev[k].push_back(i);
      }
    }
  }
  return reaches_all(fwd) && reaches_all(rev);
}

}  // namespace

bool strongly_connected(const CommGraph& graph) {
  return union_strongly_connected(std::span<const CommGraph>(&graph, 1));
}

bool check_periodic_connectivity(std::span<const CommGraph> graphs, std::size_t b) {
  if (b < 1) throw InputError("window length b must be >= 1");
  if (graphs.empty()) return true;
  if (graphs.size() <= b) return union_strongly_connected(graphs);
  for (std::size_t t = 0; t + b <= graphs.size(); ++t) {
    if (!union_strongly_connected(graphs.subspan(t, b))) return false;
  }
  return true;
}

void write_schedule(std::ostream& out, std::span<const CommGraph> graphs) {
  out << "tick,row,col,weight\n";
  for (std::size_t t = 0; t < graphs.size(); ++t) {
    const auto& w = graphs[t].weights;
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index k = 0; k < w.cols(); ++k) {
        if (w(i, k) != 0.0 || i == k) out << fmt::format("{},{},{},{}\n", t, i, k, w(i, k));
      }
    }
  }
}

std::vector<CommGraph> read_schedule(std::istream& in) {
  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line)) throw InputError("schedule is empty");
  struct Entry {
    std::size_t i, k;
    double w;
  };
  std::map<std::size_t, std::vector<Entry>> ticks;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::size_t fields[3];
    double w = 0.0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    bool ok = true;
    for (auto& f : fields) {
      auto r = std::from_chars(p, end, f);
      if (r.ec != std::errc() || r.ptr == end || *r.ptr != ',') {
        ok = false;
        break;
      }
      p = r.ptr + 1;
    }
    if (ok) {
      auto r = std::from_chars(p, end, w);
      ok = r.ec == std::errc() && r.ptr == end;
    }
    if (!ok) throw InputError(fmt::format("schedule row {} is malformed: '{}'", row, line));
    ticks[fields[0]].push_back({fields[1], fields[2], w});
    n = std::max({n, fields[1] + 1, fields[2] + 1});
  }
  std::vector<CommGraph> graphs;
  if (ticks.empty()) return graphs;
  const std::size_t n_ticks = ticks.rbegin()->first + 1;
  for (std::size_t t = 0; t < n_ticks; ++t) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
    auto it = ticks.find(t);
    if (it == ticks.end()) throw InputError(fmt::format("schedule has no entries for tick {}", t));
    for (const auto& e : it->second) {
      w(static_cast<Eigen::Index>(e.i), static_cast<Eigen::Index>(e.k)) = e.w;
    }
    graphs.push_back(graph_from_weights(std::move(w)));
  }
  return graphs;
}

std::vector<CommGraph> read_schedule_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path));
  return read_schedule(in);
}

}  // namespace fleetrl
