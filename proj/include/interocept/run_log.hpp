#pragma once

// Model checks over a recorded run log. Frame 0 carries the metadata
// (dt, drive parameters, roles, workspace cells) needed to check the log
// without the scenario file.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "interocept/error.hpp"
#include "interocept/grid_map.hpp"
#include "interocept/kinematics.hpp"
#include "interocept/scenario.hpp"
#include "interocept/scenario_engine.hpp"
#include "interocept/tracking.hpp"

namespace interocept {

struct InvariantReport {
  std::size_t frames = 0;
  std::size_t safety_violations = 0;     // receiver inside workspace while Occupied
  std::size_t phase_regressions = 0;     // phase index decreased or skipped
  std::size_t kinematic_violations = 0;  // re-integration mismatch > 1e-9
  std::size_t wheel_violations = 0;      // wheel speeds do not map back to fused
  std::size_t dissonance_violations = 0; // nonzero dissonance without an increment
  std::size_t tick_gaps = 0;
  double max_pose_error = 0.0;
  std::vector<std::string> messages;

  std::size_t total() const {
    return safety_violations + phase_regressions + kinematic_violations + wheel_violations +
           dissonance_violations + tick_gaps;
  }
  bool ok() const { return frames > 0 && total() == 0; }
};

inline std::vector<nlohmann::json> parse_run_log(const std::string& text) {
  std::vector<nlohmann::json> frames;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    frames.push_back(parse_json_text(line, "log line " + std::to_string(line_no)));
  }
  return frames;
}

inline InvariantReport check_run_log(const std::vector<nlohmann::json>& frames, double pose_tol = 1e-9) {
  InvariantReport rep;
  rep.frames = frames.size();
  if (frames.empty()) throw Error(ErrorCode::NoData, "empty run log");
  try {
    const auto& meta = frames.front().at("meta");
    const double dt = meta.at("dt").get<double>();
    const double cs = meta.at("cell_size").get<double>();
    DiffDriveParams drive;
    drive.wheel_radius = meta.at("drive").at("wheel_radius").get<double>();
    drive.axle_length = meta.at("drive").at("axle_length").get<double>();
    const std::string receiver = meta.at("receiver").get<std::string>();
    std::vector<CellCoord> workspace;
    for (const auto& c : meta.at("workspace_cells")) workspace.push_back(detail::cell_from_json(c));

    auto note = [&rep](long tick, const std::string& what) {
      if (rep.messages.size() < 50) rep.messages.push_back("tick " + std::to_string(tick) + ": " + what);
    };
    auto pose_of = [](const nlohmann::json& r) {
      const auto& p = r.at("pose");
      return RobotPose{p.at("x").get<double>(), p.at("y").get<double>(), p.at("theta").get<double>()};
    };

    for (std::size_t k = 0; k < frames.size(); ++k) {
      const auto& f = frames[k];
      const long tick = f.at("tick").get<long>();
      const bool occupied = f.at("task_state").at("occupancy").get<std::string>() == "Occupied";
      const int phase = phase_index(phase_from_string(f.at("phase").get<std::string>()));

      for (const auto& r : f.at("robots")) {
        const std::string id = r.at("id").get<std::string>();
        const RobotPose pose = pose_of(r);
        if (id == receiver && occupied) {
          const CellCoord c{static_cast<int>(std::floor(pose.x / cs)), static_cast<int>(std::floor(pose.y / cs))};
          if (std::find(workspace.begin(), workspace.end(), c) != workspace.end()) {
            ++rep.safety_violations;
            note(tick, id + " inside workspace while Occupied");
          }
        }
        const double fv = r.at("fused").at("v").get<double>();
        const double fw = r.at("fused").at("w").get<double>();
        const BodyVelocity back = from_wheel_speeds(
            {r.at("wheels").at("l").get<double>(), r.at("wheels").at("r").get<double>()}, drive);
        if (std::abs(back.v - fv) > 1e-12 * std::max(1.0, std::abs(fv)) ||
            std::abs(back.w - fw) > 1e-12 * std::max(1.0, std::abs(fw))) {
          ++rep.wheel_violations;
          note(tick, id + " wheel speeds do not reproduce fused command");
        }
      }

      bool any_increment = false;
      std::vector<std::string> nudged;
      for (const auto& c : f.value("commands", nlohmann::json::array())) {
        if (c.value("kind", std::string{}) == "velocity_increment") {
          nudged.push_back(c.at("robot_id").get<std::string>());
          any_increment = true;
        }
      }
      for (const auto& d : f.value("dissonance", nlohmann::json::array())) {
        const std::string id = d.at("robot").get<std::string>();
        const bool had = any_increment && std::find(nudged.begin(), nudged.end(), id) != nudged.end();
        if (!had && d.at("dissonance").get<double>() != 0.0) {
          ++rep.dissonance_violations;
          note(tick, id + " dissonance without intervention");
        }
      }

      if (k == 0) continue;
      const auto& prev = frames[k - 1];
      if (tick != prev.at("tick").get<long>() + 1) {
        ++rep.tick_gaps;
        note(tick, "tick sequence gap");
      }
      const int prev_phase = phase_index(phase_from_string(prev.at("phase").get<std::string>()));
      if (phase < prev_phase || phase > prev_phase + 1) {
        ++rep.phase_regressions;
        note(tick, "phase jump from index " + std::to_string(prev_phase) + " to " + std::to_string(phase));
      }
      const auto& robots = f.at("robots");
      const auto& prev_robots = prev.at("robots");
      for (const auto& r : robots) {
        const std::string id = r.at("id").get<std::string>();
        auto it = std::find_if(prev_robots.begin(), prev_robots.end(),
                               [&id](const nlohmann::json& p) { return p.at("id").get<std::string>() == id; });
        if (it == prev_robots.end()) {
          ++rep.kinematic_violations;
          note(tick, id + " missing from previous frame");
          continue;
        }
        const RobotPose expect = integrate_unicycle(pose_of(*it), r.at("fused").at("v").get<double>(),
                                                    r.at("fused").at("w").get<double>(), dt);
        const RobotPose got = pose_of(r);
        const double err = std::max({std::abs(expect.x - got.x), std::abs(expect.y - got.y),
                                     std::abs(wrap_angle(expect.theta - got.theta))});
        rep.max_pose_error = std::max(rep.max_pose_error, err);
        if (err > pose_tol) {
          ++rep.kinematic_violations;
          note(tick, id + " pose differs from re-integration by " + std::to_string(err));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("run log: ") + e.what());
  }
  return rep;
}

inline nlohmann::json report_to_json(const InvariantReport& r) {
  return {{"frames", r.frames},
          {"safety_violations", r.safety_violations},
          {"phase_regressions", r.phase_regressions},
          {"kinematic_violations", r.kinematic_violations},
          {"wheel_violations", r.wheel_violations},
          {"dissonance_violations", r.dissonance_violations},
          {"tick_gaps", r.tick_gaps},
          {"max_pose_error", r.max_pose_error},
          {"messages", r.messages},
          {"ok", r.ok()}};
}

/// Fused linear speed of one robot over the run, sampled at 1/dt.
inline VelocityProfile velocity_profile_from_log(const std::vector<nlohmann::json>& frames, const std::string& robot) {
  if (frames.empty()) throw Error(ErrorCode::NoData, "empty run log");
  VelocityProfile p;
  try {
    p.sample_rate_hz = 1.0 / frames.front().at("meta").at("dt").get<double>();
    for (std::size_t k = 1; k < frames.size(); ++k) {
      for (const auto& r : frames[k].at("robots")) {
        if (r.at("id").get<std::string>() == robot) p.samples.push_back(r.at("fused").at("v").get<double>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("run log: ") + e.what());
  }
  if (p.samples.empty()) throw Error(ErrorCode::UnknownRobot, "no samples for robot '" + robot + "'");
  return p;
}

}  // namespace interocept
