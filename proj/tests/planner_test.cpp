#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "interocept/planner.hpp"
#include "test_support.hpp"

using namespace interocept;

namespace {

const TaskPrecondition kPathway{AvailabilityRequirement::Any, OccupancyRequirement::Clear, kInfiniteCost};

bool has_cell(const Path& p, CellCoord c) { return std::find(p.cells.begin(), p.cells.end(), c) != p.cells.end(); }

}  // namespace

TEST(PlanAstar, EmptyGridDiagonal) {
  const GridMap g = build_grid(5, 5, 1.0, {}, {});
  const TaskHypergraph hg;
  const PlanResult r = plan_astar(g, hg, {0, 0}, {4, 4});
  ASSERT_TRUE(r.found());
  EXPECT_EQ(r.path->cells.size(), 5u);
  EXPECT_NEAR(r.path->total_cost, 4.0 * std::sqrt(2.0), 1e-12);
  const auto oracle = fixtures::bellman_ford_to_goal(g, hg, {4, 4});
  EXPECT_NEAR(r.path->total_cost, oracle[g.index({0, 0})], 1e-12);
}

TEST(PlanAstar, WallWithSingleGap) {
  std::vector<CellCoord> wall;
  for (int r = 0; r < 4; ++r) wall.push_back({2, r});
  const GridMap g = build_grid(5, 5, 1.0, wall, {});
  const TaskHypergraph hg;
  const PlanResult r = plan_astar(g, hg, {0, 0}, {4, 0});
  ASSERT_TRUE(r.found());
  EXPECT_TRUE(has_cell(*r.path, {2, 4}));
  const auto oracle = fixtures::bellman_ford_to_goal(g, hg, {4, 0});
  EXPECT_NEAR(r.path->total_cost, oracle[g.index({0, 0})], 1e-12);
}

TEST(PlanAstar, CorridorGatedByOccupancy) {
  // rows 0 and 2 blocked except the start/goal columns; row 1 is the only corridor
  std::vector<CellCoord> walls;
  for (int c = 1; c < 6; ++c) {
    walls.push_back({c, 0});
    walls.push_back({c, 2});
  }
  const GridMap g = build_grid(7, 3, 1.0, walls, {});
  TaskHypergraph hg;
  std::vector<int> members;
  for (int c = 1; c < 6; ++c) members.push_back(hg.add_spatial_vertex({c, 1}));
  hg.add_hyperedge(members, kPathway);

  hg.set_task_state(std::nullopt, PathwayOccupancy::Occupied);
  EXPECT_FALSE(plan_astar(g, hg, {0, 1}, {6, 1}).found());
  EXPECT_FALSE(plan_dijkstra(g, hg, {0, 1}, {6, 1}).found());

  hg.set_task_state(std::nullopt, PathwayOccupancy::Clear);
  const PlanResult r = plan_astar(g, hg, {0, 1}, {6, 1});
  ASSERT_TRUE(r.found());
  EXPECT_TRUE(has_cell(*r.path, {3, 1}));
  EXPECT_DOUBLE_EQ(r.path->total_cost, 6.0);

  // override beats the stored state
  hg.set_task_state(std::nullopt, PathwayOccupancy::Occupied);
  PlanOptions opts{TaskState{Availability::Available, PathwayOccupancy::Clear}};
  EXPECT_TRUE(plan_astar(g, hg, {0, 1}, {6, 1}, opts).found());
}

TEST(PlanDijkstra, IdentityAndEndpoints) {
  const GridMap g = build_grid(5, 5, 1.0, {{3, 3}}, {});
  const TaskHypergraph hg;
  const PlanResult same = plan_dijkstra(g, hg, {1, 1}, {1, 1});
  ASSERT_TRUE(same.found());
  EXPECT_EQ(same.path->cells.size(), 1u);
  EXPECT_EQ(same.path->total_cost, 0.0);
  try {
    plan_dijkstra(g, hg, {0, 0}, {3, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidEndpoint);
  }
  EXPECT_THROW(plan_astar(g, hg, {-1, 0}, {1, 1}), Error);
}

TEST(PathCost, Examples) {
  const GridMap g = build_grid(3, 3, 1.0, {}, {{{1, 1}, "mud", 2.5}});
  const TaskHypergraph hg;
  EXPECT_EQ(path_cost(g, hg, Path{{{0, 0}}}), 0.0);
  EXPECT_EQ(path_cost(g, hg, Path{{{0, 0}, {1, 0}}}), 1.0);
  EXPECT_NEAR(path_cost(g, hg, Path{{{0, 0}, {1, 1}}}), 2.5 * std::sqrt(2.0), 1e-12);
  try {
    path_cost(g, hg, Path{{{0, 0}, {2, 0}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BrokenPath);
  }
}

TEST(PlannerProperty, AstarMatchesDijkstraAndOracle) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto w = fixtures::random_world(12, 1000 + seed, 0.05 * static_cast<double>(seed % 7));
    const PlanResult a = plan_astar(w.grid, w.hg, w.start, w.goal);
    const PlanResult d = plan_dijkstra(w.grid, w.hg, w.start, w.goal);
    const auto oracle = fixtures::bellman_ford_to_goal(w.grid, w.hg, w.goal);
    const double truth = oracle[w.grid.index(w.start)];
    ASSERT_EQ(a.found(), d.found()) << seed;
    ASSERT_EQ(a.found(), truth < kInfiniteCost) << seed;
    if (!a.found()) continue;
    EXPECT_EQ(a.path->total_cost, d.path->total_cost) << seed;
    EXPECT_NEAR(a.path->total_cost, truth, 1e-9 * std::max(1.0, truth)) << seed;
    EXPECT_LE(a.expansions, d.expansions) << seed;
  }
}

TEST(PlannerProperty, PathsAreValidAndAvoidBlockedCells) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto w = fixtures::random_world(12, 5000 + seed);
    const PlanResult r = plan_astar(w.grid, w.hg, w.start, w.goal);
    if (!r.found()) continue;
    EXPECT_EQ(r.path->cells.front(), w.start);
    EXPECT_EQ(r.path->cells.back(), w.goal);
    EXPECT_NEAR(path_cost(w.grid, w.hg, *r.path), r.path->total_cost, 1e-9);
    for (std::size_t i = 1; i < r.path->cells.size(); ++i) {
      EXPECT_LT(effective_move_cost(w.hg, w.grid, r.path->cells[i], 1.0), kInfiniteCost);
    }
  }
}

TEST(PlannerProperty, ClearingOccupancyNeverRaisesCost) {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto w = fixtures::random_world(10, 9000 + seed);
    const TaskState occupied{w.hg.state().availability, PathwayOccupancy::Occupied};
    const TaskState clear{w.hg.state().availability, PathwayOccupancy::Clear};
    const PlanResult before = plan_astar(w.grid, w.hg, w.start, w.goal, {occupied});
    const PlanResult after = plan_astar(w.grid, w.hg, w.start, w.goal, {clear});
    // Only Clear-requiring edges become satisfied; Occupied-requiring ones flip
    // the other way, so the claim only holds when none exist.
    bool has_occupied_requirement = false;
    for (const auto& [id, e] : w.hg.edges()) {
      if (const auto* p = std::get_if<TaskPrecondition>(&e.attribute)) {
        has_occupied_requirement |= p->required_occupancy == OccupancyRequirement::Occupied;
      }
    }
    if (has_occupied_requirement || !before.found()) continue;
    ASSERT_TRUE(after.found());
    EXPECT_LE(after.path->total_cost, before.path->total_cost + 1e-12);
  }
}

TEST(PlannerProperty, OctileIsAdmissibleOnSmallGrids) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto w = fixtures::random_world(6, 300 + seed);
    const auto truth = cost_to_go(w.grid, w.hg, w.goal);
    const auto oracle = fixtures::bellman_ford_to_goal(w.grid, w.hg, w.goal);
    for (std::size_t i = 0; i < w.grid.size(); ++i) {
      if (truth[i] < kInfiniteCost) EXPECT_LE(octile_distance(w.grid.coord(i), w.goal), truth[i] + 1e-12);
      if (oracle[i] < kInfiniteCost) EXPECT_NEAR(truth[i], oracle[i], 1e-9);
      else EXPECT_EQ(truth[i], kInfiniteCost);
    }
  }
}

TEST(PathJson, RoundTrip) {
  const Path p{{{0, 0}, {1, 1}, {2, 1}}, 2.414, 1.2};
  const Path back = path_from_json(path_to_json(p));
  EXPECT_EQ(back.cells, p.cells);
  EXPECT_EQ(back.total_cost, p.total_cost);
}
