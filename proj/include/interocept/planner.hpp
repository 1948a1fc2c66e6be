#pragma once

// Optimal grid search with hypergraph state-dependent move costs.
//
// plan_astar and plan_dijkstra share one search routine and the same cost
// evaluation, so on any instance they agree on the optimal total cost bit for
// bit. A* reopens a closed node whenever it finds a strictly cheaper g, and it
// keeps popping entries whose f is within a tiny relative slack of the best
// goal cost. That way equal-cost routes whose floating-point sums differ in the
// last ulp cannot make A* settle on a cost that Dijkstra beats.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <queue>
#include <vector>

#include <json.hpp>

#include "interocept/error.hpp"
#include "interocept/grid_map.hpp"
#include "interocept/task_hypergraph.hpp"

namespace interocept {

struct Path {
  std::vector<CellCoord> cells;
  double total_cost = 0.0;
  double length_m = 0.0;
};

struct PlanResult {
  std::optional<Path> path;  // nullopt: no path under the current task state
  std::size_t expansions = 0;

  bool found() const noexcept { return path.has_value(); }
};

struct PlanOptions {
  /// Evaluate preconditions against this state instead of the hypergraph's.
  std::optional<TaskState> state_override;
};

inline double octile_distance(CellCoord a, CellCoord b) noexcept {
  const double dx = std::abs(a.col - b.col);
  const double dy = std::abs(a.row - b.row);
  return std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy);
}

namespace detail {

inline constexpr double kGoalSlack = 1e-9;

struct OpenEntry {
  double f;
  double g;
  std::uint64_t seq;
  std::size_t index;
};

// priority_queue keeps the "largest" on top: smallest f, then largest g, then FIFO.
struct OpenOrder {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const noexcept {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g < b.g;
    return a.seq > b.seq;
  }
};

inline void require_endpoint(const GridMap& grid, CellCoord c, const char* which) {
  if (!grid.in_bounds(c)) throw Error(ErrorCode::InvalidEndpoint, std::string(which) + " " + to_string(c) + " out of bounds");
  if (!grid.is_free(c)) throw Error(ErrorCode::InvalidEndpoint, std::string(which) + " " + to_string(c) + " is an obstacle");
}

template <typename Heuristic>
PlanResult search(const GridMap& grid, const TaskHypergraph& hg, CellCoord start, CellCoord goal,
                  const PlanOptions& options, Heuristic&& heuristic) {
  require_endpoint(grid, start, "start");
  require_endpoint(grid, goal, "goal");
  const TaskState& state = options.state_override ? *options.state_override : hg.state();

  const std::size_t n = grid.size();
  std::vector<double> g(n, kInfiniteCost);
  std::vector<double> step_len(n, 0.0);
  std::vector<std::size_t> parent(n, n);
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;
  std::uint64_t seq = 0;

  const std::size_t start_i = grid.index(start);
  const std::size_t goal_i = grid.index(goal);
  g[start_i] = 0.0;
  open.push({heuristic(start), 0.0, seq++, start_i});

  PlanResult result;
  while (!open.empty()) {
    const OpenEntry top = open.top();
    if (g[goal_i] < kInfiniteCost && top.f > g[goal_i] * (1.0 + kGoalSlack)) break;
    open.pop();
    if (top.g != g[top.index]) continue;  // stale entry
    ++result.expansions;
    if (top.index == goal_i) continue;

    const CellCoord here = grid.coord(top.index);
    for (const Neighbor& nb : neighbors(grid, here)) {
      const double move = effective_move_cost(hg, grid, nb.cell, nb.base_cost, state);
      if (!(move < kInfiniteCost)) continue;
      const double candidate = top.g + move;
      const std::size_t j = grid.index(nb.cell);
      if (candidate < g[j]) {
        g[j] = candidate;
        parent[j] = top.index;
        step_len[j] = nb.base_cost;
        open.push({candidate + heuristic(nb.cell), candidate, seq++, j});
      }
    }
  }

  if (!(g[goal_i] < kInfiniteCost)) return result;

  Path path;
  path.total_cost = g[goal_i];
  double length = 0.0;
  for (std::size_t i = goal_i; i != n; i = parent[i]) {
    path.cells.push_back(grid.coord(i));
    length += step_len[i];
    if (i == start_i) break;
  }
  std::reverse(path.cells.begin(), path.cells.end());
  path.length_m = length * grid.cell_size();
  result.path = std::move(path);
  return result;
}

}  // namespace detail

inline PlanResult plan_astar(const GridMap& grid, const TaskHypergraph& hg, CellCoord start,
                             CellCoord goal, const PlanOptions& options = {}) {
  return detail::search(grid, hg, start, goal, options,
                        [goal](CellCoord c) { return octile_distance(c, goal); });
}

inline PlanResult plan_dijkstra(const GridMap& grid, const TaskHypergraph& hg, CellCoord start,
                                CellCoord goal, const PlanOptions& options = {}) {
  return detail::search(grid, hg, start, goal, options, [](CellCoord) { return 0.0; });
}

/// Sum of effective move costs along consecutive steps of the path.
inline double path_cost(const GridMap& grid, const TaskHypergraph& hg, const Path& path,
                        const PlanOptions& options = {}) {
  if (path.cells.empty()) throw Error(ErrorCode::EmptyPath, "path has no cells");
  const TaskState& state = options.state_override ? *options.state_override : hg.state();
  double total = 0.0;
  for (std::size_t i = 1; i < path.cells.size(); ++i) {
    const CellCoord a = path.cells[i - 1];
    const CellCoord b = path.cells[i];
    const auto base = step_base_cost(a, b);
    if (!base) throw Error(ErrorCode::BrokenPath, to_string(a) + " -> " + to_string(b));
    grid.require_in_bounds(a);
    total += effective_move_cost(hg, grid, b, *base, state);
  }
  return total;
}

/// True optimal cost-to-go to `goal` from every cell (infinity where
/// unreachable or blocked), by Dijkstra over reversed moves.
inline std::vector<double> cost_to_go(const GridMap& grid, const TaskHypergraph& hg,
                                      CellCoord goal, const PlanOptions& options = {}) {
  detail::require_endpoint(grid, goal, "goal");
  const TaskState& state = options.state_override ? *options.state_override : hg.state();
  std::vector<double> dist(grid.size(), kInfiniteCost);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  dist[grid.index(goal)] = 0.0;
  open.push({0.0, grid.index(goal)});
  while (!open.empty()) {
    const auto [d, i] = open.top();
    open.pop();
    if (d != dist[i]) continue;
    const CellCoord here = grid.coord(i);
    // Neighbor relation is symmetric, so predecessors of `here` are its neighbors.
    for (const Neighbor& nb : neighbors(grid, here)) {
      const double move = effective_move_cost(hg, grid, here, nb.base_cost, state);
      if (!(move < kInfiniteCost)) continue;
      const std::size_t j = grid.index(nb.cell);
      if (d + move < dist[j]) {
        dist[j] = d + move;
        open.push({dist[j], j});
      }
    }
  }
  return dist;
}

inline nlohmann::json path_to_json(const Path& path) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : path.cells) cells.push_back(detail::cell_to_json(c));
  return {{"cells", cells}, {"total_cost", path.total_cost}, {"length_m", path.length_m}};
}

inline Path path_from_json(const nlohmann::json& j) {
  Path p;
  for (const auto& c : j.at("cells")) p.cells.push_back(detail::cell_from_json(c));
  p.total_cost = j.value("total_cost", 0.0);
  p.length_m = j.value("length_m", 0.0);
  return p;
}

}  // namespace interocept
