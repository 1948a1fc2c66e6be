#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "interocept/grid_map.hpp"
#include "interocept/task_hypergraph.hpp"

namespace interocept::fixtures {

inline const std::string kDataDir = INTEROCEPT_DATA_DIR;
inline const std::string kScenarioPath = kDataDir + "/handover/scenario.json";

struct RandomWorld {
  GridMap grid;
  TaskHypergraph hg;
  CellCoord start;
  CellCoord goal;
};

/// Random obstacles (~20%), per-cell terrain in [1, 3], a few terrain and
/// precondition hyperedges, random task state. Start and goal are free.
inline RandomWorld random_world(int size, std::uint64_t seed, double obstacle_rate = 0.2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> coord(0, size - 1);

  std::vector<CellCoord> obstacles;
  std::vector<TerrainPatch> patches;
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      if (unit(rng) < obstacle_rate) {
        obstacles.push_back({c, r});
      } else if (unit(rng) < 0.3) {
        patches.push_back({{c, r}, "rough", 1.0 + 2.0 * unit(rng)});
      }
    }
  }
  RandomWorld w{build_grid(size, size, 0.5, obstacles, patches), {}, {}, {}};

  auto random_free = [&]() {
    for (;;) {
      const CellCoord c{coord(rng), coord(rng)};
      if (w.grid.is_free(c)) return c;
    }
  };
  std::uniform_int_distribution<int> edge_count(1, 4);
  std::uniform_int_distribution<int> member_count(1, std::max(2, size / 2));
  for (int e = edge_count(rng); e > 0; --e) {
    std::vector<int> members;
    for (int m = member_count(rng); m > 0; --m) members.push_back(w.hg.ensure_spatial_vertex(random_free()));
    if (unit(rng) < 0.5) {
      w.hg.add_hyperedge(members, TerrainFeature{"mud", 1.0 + 2.0 * unit(rng)});
    } else {
      const auto avail = static_cast<AvailabilityRequirement>(std::uniform_int_distribution<int>(0, 2)(rng));
      const auto occ = static_cast<OccupancyRequirement>(std::uniform_int_distribution<int>(0, 2)(rng));
      const double penalty = unit(rng) < 0.5 ? kInfiniteCost : 0.5 + 5.0 * unit(rng);
      w.hg.add_hyperedge(members, TaskPrecondition{avail, occ, penalty});
    }
  }
  w.hg.set_task_state(unit(rng) < 0.5 ? Availability::Available : Availability::Unavailable,
                      unit(rng) < 0.5 ? PathwayOccupancy::Clear : PathwayOccupancy::Occupied);
  w.start = random_free();
  w.goal = random_free();
  return w;
}

/// Independent cost-to-go oracle: Bellman-Ford relaxation over all cells and
/// all 8 directions with its own corner rule, no priority queue.
inline std::vector<double> bellman_ford_to_goal(const GridMap& grid, const TaskHypergraph& hg, CellCoord goal) {
  const int w = grid.width();
  const int h = grid.height();
  std::vector<double> dist(grid.size(), kInfiniteCost);
  dist[grid.index(goal)] = 0.0;
  auto free = [&](int c, int r) { return c >= 0 && r >= 0 && c < w && r < h && grid.is_free({c, r}); };
  for (bool changed = true; changed;) {
    changed = false;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (!free(c, r)) continue;
        double& here = dist[grid.index({c, r})];
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -1; dc <= 1; ++dc) {
            if (dr == 0 && dc == 0) continue;
            const int nc = c + dc;
            const int nr = r + dr;
            if (!free(nc, nr)) continue;
            if (dr != 0 && dc != 0 && (!free(nc, r) || !free(c, nr))) continue;
            const double next = dist[grid.index({nc, nr})];
            if (!(next < kInfiniteCost)) continue;
            const double base = (dr != 0 && dc != 0) ? std::sqrt(2.0) : 1.0;
            const double step = effective_move_cost(hg, grid, {nc, nr}, base);
            if (!(step < kInfiniteCost)) continue;
            if (next + step < here - 1e-12) {
              here = next + step;
              changed = true;
            }
          }
        }
      }
    }
  }
  return dist;
}

}  // namespace interocept::fixtures
