#pragma once

// Delivery/handover state machine. The deliverer holds the pathway claim
// (it plans as if the pathway were clear); the receiver is held until the
// claim is released and then enters, waits out the handover and leaves.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "interocept/error.hpp"
#include "interocept/grid_map.hpp"
#include "interocept/kinematics.hpp"
#include "interocept/planner.hpp"
#include "interocept/scenario.hpp"
#include "interocept/shared_control.hpp"
#include "interocept/task_hypergraph.hpp"
#include "interocept/tracking.hpp"

namespace interocept {

enum class ScenarioPhase { ADeliver, AReverse, BWait, BEnter, Handover, BTransport, Done };

inline constexpr int kPhaseCount = 7;

inline const char* to_string(ScenarioPhase p) {
  switch (p) {
    case ScenarioPhase::ADeliver: return "ADeliver";
    case ScenarioPhase::AReverse: return "AReverse";
    case ScenarioPhase::BWait: return "BWait";
    case ScenarioPhase::BEnter: return "BEnter";
    case ScenarioPhase::Handover: return "Handover";
    case ScenarioPhase::BTransport: return "BTransport";
    case ScenarioPhase::Done: return "Done";
  }
  throw Error(ErrorCode::InvalidPhase, std::to_string(static_cast<int>(p)));
}

inline ScenarioPhase phase_from_string(const std::string& s) {
  for (int i = 0; i < kPhaseCount; ++i) {
    const auto p = static_cast<ScenarioPhase>(i);
    if (s == to_string(p)) return p;
  }
  throw Error(ErrorCode::InvalidPhase, "unknown phase '" + s + "'");
}

inline int phase_index(ScenarioPhase p) { return static_cast<int>(p); }

struct RobotNav {
  std::optional<Path> path;
  std::size_t waypoint = 0;
  bool arrived = false;
  std::optional<CellCoord> target;
  bool claim_holder = false;  // plans with the pathway treated as clear
};

struct RobotState {
  std::string id;
  RobotPose pose;
  RobotNav nav;
  double odometer_m = 0.0;
  CellCoord last_free_cell;
};

struct World {
  Scenario scenario;
  std::vector<RobotState> robots;  // same order as scenario.robots
  ScenarioPhase phase = ScenarioPhase::ADeliver;
  double handover_elapsed_s = 0.0;
  bool pathway_released = false;
  long occupancy_override_tick = -1;  // tick of the latest operator occupancy command
  // graph signature at the last plan, for replanning on change
  std::size_t planned_edge_count = 0;
  TaskState planned_state;
};

struct StepOutput {
  ScenarioPhase phase = ScenarioPhase::ADeliver;
  std::vector<AutonomousCommand> commands;
  std::vector<bool> held;  // held robots are fused against zero limits
};

/// Cell used as the start of a (re)plan: the robot's current cell when free,
/// otherwise the last free cell it occupied.
inline CellCoord planning_cell(const World& w, const RobotState& r) {
  const auto& map = w.scenario.map;
  if (auto c = map.cell_at(r.pose.x, r.pose.y); c && map.is_free(*c)) return *c;
  return r.last_free_cell;
}

inline bool plan_robot(World& w, std::size_t i, CellCoord target) {
  RobotState& r = w.robots.at(i);
  PlanOptions opts;
  if (r.nav.claim_holder) {
    TaskState exempt = w.scenario.hypergraph.state();
    exempt.availability = Availability::Available;
    exempt.occupancy = PathwayOccupancy::Clear;
    opts.state_override = exempt;
  }
  PlanResult res = plan_astar(w.scenario.map, w.scenario.hypergraph, planning_cell(w, r), target, opts);
  r.nav.target = target;
  r.nav.path = std::move(res.path);
  r.nav.waypoint = 0;
  r.nav.arrived = false;
  return r.nav.path.has_value();
}

inline World make_world(Scenario scenario) {
  World w;
  w.scenario = std::move(scenario);
  for (const auto& spec : w.scenario.robots) {
    RobotState r;
    r.id = spec.id;
    const Point2 c = w.scenario.map.center(spec.start);
    r.pose = {c.x, c.y, wrap_angle(spec.start_theta)};
    r.last_free_cell = spec.start;
    w.robots.push_back(std::move(r));
  }
  // The deliverer claims the pathway for the whole delivery.
  w.scenario.hypergraph.set_task_state(Availability::Unavailable, PathwayOccupancy::Occupied);
  w.robots[0].nav.claim_holder = true;
  plan_robot(w, 0, w.scenario.dock());
  w.planned_edge_count = w.scenario.hypergraph.edge_count();
  w.planned_state = w.scenario.hypergraph.state();
  return w;
}

/// Replans every robot that has a target but has not arrived, when the
/// hypergraph or task state changed or when it has no path yet.
inline void refresh_plans(World& w) {
  const auto& hg = w.scenario.hypergraph;
  const bool changed = hg.edge_count() != w.planned_edge_count || hg.state() != w.planned_state;
  for (std::size_t i = 0; i < w.robots.size(); ++i) {
    RobotNav& nav = w.robots[i].nav;
    if (!nav.target || nav.arrived) continue;
    if (changed || !nav.path) plan_robot(w, i, *nav.target);
  }
  w.planned_edge_count = hg.edge_count();
  w.planned_state = hg.state();
}

/// Waypoint-following controller: turn in place on large heading error,
/// slow down on the final approach.
inline AutonomousCommand follow_path(const RobotPose& pose, RobotNav& nav, const GridMap& map, double cruise,
                                     const DiffDriveParams& drive, double arrival_m) {
  if (!nav.path || nav.arrived || nav.path->cells.empty()) return {};
  const auto& cells = nav.path->cells;
  const double advance_radius = 0.25 * map.cell_size();
  double dx = 0.0;
  double dy = 0.0;
  double dist = 0.0;
  for (;;) {
    const Point2 t = map.center(cells[nav.waypoint]);
    dx = t.x - pose.x;
    dy = t.y - pose.y;
    dist = std::hypot(dx, dy);
    if (nav.waypoint + 1 < cells.size() && dist < advance_radius) {
      ++nav.waypoint;
      continue;
    }
    break;
  }
  const bool final_leg = nav.waypoint + 1 == cells.size();
  if (final_leg && dist < arrival_m) {
    nav.arrived = true;
    return {};
  }
  const double err = wrap_angle(std::atan2(dy, dx) - pose.theta);
  AutonomousCommand cmd;
  cmd.w = std::clamp(3.0 * err, -drive.w_max, drive.w_max);
  if (std::abs(err) <= 0.5) {
    const double speed = final_leg ? std::min(cruise, 2.0 * dist) : cruise;
    cmd.v = std::clamp(speed * std::cos(err), 0.0, drive.v_max);
  }
  return cmd;
}

/// Advances the phase by at most one step and produces autonomous commands
/// for the current tick.
inline StepOutput step_scenario(World& w, double dt, long tick = 0) {
  if (phase_index(w.phase) < 0 || phase_index(w.phase) >= kPhaseCount) {
    throw Error(ErrorCode::InvalidPhase, std::to_string(phase_index(w.phase)));
  }
  if (w.robots.size() != 2) throw Error(ErrorCode::InvalidScenario, "world needs exactly two robots");
  const Scenario& sc = w.scenario;
  RobotState& a = w.robots[0];
  RobotState& b = w.robots[1];

  for (const auto& r : w.robots) {
    if (r.nav.path && !r.nav.arrived) {
      const double off = distance_to_path(*r.nav.path, sc.map.cell_size(), {r.pose.x, r.pose.y});
      if (off > sc.thresholds.off_path_m) {
        throw Error(ErrorCode::RobotOffPath, r.id + " is " + std::to_string(off) + " m from its path");
      }
    }
  }

  // The deliverer releases the pathway once it is outside the corridor and
  // workspace. An operator occupancy command in the same tick takes precedence.
  if ((w.phase == ScenarioPhase::AReverse || w.phase == ScenarioPhase::BWait) && !w.pathway_released) {
    auto c = sc.map.cell_at(a.pose.x, a.pose.y);
    if (c && !sc.in_pathway(*c) && !sc.in_workspace(*c)) {
      if (w.occupancy_override_tick != tick) {
        w.scenario.hypergraph.set_task_state(std::nullopt, PathwayOccupancy::Clear);
      }
      w.pathway_released = true;
    }
  }

  switch (w.phase) {
    case ScenarioPhase::ADeliver:
      if (a.nav.arrived) {
        w.phase = ScenarioPhase::AReverse;
        w.scenario.hypergraph.set_task_state(Availability::Available, std::nullopt);
        plan_robot(w, 0, sc.deliverer().goal);
      }
      break;
    case ScenarioPhase::AReverse:
      w.phase = ScenarioPhase::BWait;
      break;
    case ScenarioPhase::BWait:
      if (w.scenario.hypergraph.state().occupancy == PathwayOccupancy::Clear && plan_robot(w, 1, sc.dock())) {
        w.phase = ScenarioPhase::BEnter;
      } else {
        b.nav = RobotNav{};
      }
      break;
    case ScenarioPhase::BEnter:
      if (b.nav.arrived) {
        w.phase = ScenarioPhase::Handover;
        w.handover_elapsed_s = 0.0;
      }
      break;
    case ScenarioPhase::Handover:
      w.handover_elapsed_s += dt;
      if (w.handover_elapsed_s >= sc.dwell_s - 1e-9) {
        w.phase = ScenarioPhase::BTransport;
        plan_robot(w, 1, sc.receiver().goal);
      }
      break;
    case ScenarioPhase::BTransport:
      if (b.nav.arrived) w.phase = ScenarioPhase::Done;
      break;
    case ScenarioPhase::Done:
      break;
  }
  w.planned_edge_count = w.scenario.hypergraph.edge_count();
  w.planned_state = w.scenario.hypergraph.state();

  StepOutput out;
  out.phase = w.phase;
  const bool b_moves = w.phase == ScenarioPhase::BEnter || w.phase == ScenarioPhase::BTransport;
  for (std::size_t i = 0; i < w.robots.size(); ++i) {
    RobotState& r = w.robots[i];
    const bool may_move = w.phase != ScenarioPhase::Done && (i == 0 || b_moves);
    AutonomousCommand cmd;
    if (may_move) {
      cmd = follow_path(r.pose, r.nav, sc.map, sc.robots[i].cruise_speed, sc.drive, sc.thresholds.arrival_m);
    }
    cmd.tick = tick;
    out.commands.push_back(cmd);
    out.held.push_back(!may_move || !r.nav.path || r.nav.arrived);
  }
  return out;
}

}  // namespace interocept
