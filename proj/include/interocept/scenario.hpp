#pragma once

// Delivery/handover scenario definition. robots[0] delivers to the
// workspace and backs out of the shared pathway; robots[1] waits for the
// pathway to clear, receives the handover in the workspace and leaves.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "interocept/error.hpp"
#include "interocept/grid_map.hpp"
#include "interocept/kinematics.hpp"
#include "interocept/semantics.hpp"
#include "interocept/shared_control.hpp"
#include "interocept/task_hypergraph.hpp"

namespace interocept {

struct RobotSpec {
  std::string id;
  CellCoord start;
  CellCoord goal;
  double cruise_speed = 0.5;
  double start_theta = 0.0;
};

struct ScenarioThresholds {
  double proximity_m = 0.6;
  double off_path_m = 1.0;
  double arrival_m = 0.05;
};

struct Scenario {
  GridMap map;
  TaskHypergraph hypergraph;
  std::vector<RobotSpec> robots;  // [deliverer, receiver]
  std::vector<CellCoord> workspace_cells;
  std::vector<CellCoord> pathway_cells;
  double dwell_s = 3.0;
  ScenarioThresholds thresholds;
  double dt = 0.05;
  DiffDriveParams drive;
  double dv_max = 0.5;
  double dw_max = 1.0;
  long max_ticks = 6000;
  EncodeParams semantics;
  nlohmann::json document;  // as loaded, with map/hypergraph inlined

  const RobotSpec& deliverer() const { return robots.at(0); }
  const RobotSpec& receiver() const { return robots.at(1); }
  CellCoord dock() const { return workspace_cells.at(0); }

  CommandLimits limits() const { return {drive.v_max, drive.w_max, dv_max, dw_max}; }

  int robot_index(const std::string& id) const {
    for (std::size_t i = 0; i < robots.size(); ++i) {
      if (robots[i].id == id) return static_cast<int>(i);
    }
    return -1;
  }

  bool in_workspace(CellCoord c) const {
    return std::find(workspace_cells.begin(), workspace_cells.end(), c) != workspace_cells.end();
  }
  bool in_pathway(CellCoord c) const {
    return std::find(pathway_cells.begin(), pathway_cells.end(), c) != pathway_cells.end();
  }
};

namespace detail {

inline std::string location_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline std::string read_file(const std::filesystem::path& path, ErrorCode code = ErrorCode::ParseError) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(code, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

/// Parses JSON text, reporting syntax errors with line and column.
inline nlohmann::json parse_json_text(const std::string& text, const std::string& what,
                                      ErrorCode code = ErrorCode::ParseError) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(code, what + ": syntax error at " +
                          detail::location_of(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + e.what());
  }
}

inline nlohmann::json load_json_file(const std::filesystem::path& path,
                                     ErrorCode code = ErrorCode::ParseError) {
  return parse_json_text(detail::read_file(path, code), path.string(), code);
}

/// `base_dir` resolves map/hypergraph given as relative file paths.
inline Scenario scenario_from_json(nlohmann::json j, const std::filesystem::path& base_dir = {}) {
  try {
    detail::reject_unknown_keys(
        j, {"map", "hypergraph", "robots", "workspace_cells", "pathway_cells", "dwell_s", "thresholds", "dt",
            "drive", "input_limits", "max_ticks", "terrain_multipliers", "default_terrain_multiplier"},
        "scenario");
    for (const char* key : {"map", "hypergraph"}) {
      if (j.at(key).is_string()) j[key] = load_json_file(base_dir / j[key].get<std::string>());
    }
    Scenario s;
    s.map = grid_from_json(j.at("map"));
    s.hypergraph = hypergraph_from_json(j.at("hypergraph"));
    for (const auto& r : j.at("robots")) {
      detail::reject_unknown_keys(r, {"id", "start", "goal", "cruise_speed", "start_theta"}, "scenario.robots");
      s.robots.push_back({r.at("id").get<std::string>(), detail::cell_from_json(r.at("start")),
                          detail::cell_from_json(r.at("goal")), r.value("cruise_speed", 0.5),
                          r.value("start_theta", 0.0)});
    }
    for (const auto& c : j.at("workspace_cells")) s.workspace_cells.push_back(detail::cell_from_json(c));
    for (const auto& c : j.value("pathway_cells", nlohmann::json::array())) {
      s.pathway_cells.push_back(detail::cell_from_json(c));
    }
    s.dwell_s = j.value("dwell_s", 3.0);
    if (j.contains("thresholds")) {
      const auto& t = j["thresholds"];
      detail::reject_unknown_keys(t, {"proximity_m", "off_path_m", "arrival_m"}, "scenario.thresholds");
      s.thresholds.proximity_m = t.value("proximity_m", s.thresholds.proximity_m);
      s.thresholds.off_path_m = t.value("off_path_m", s.thresholds.off_path_m);
      s.thresholds.arrival_m = t.value("arrival_m", s.thresholds.arrival_m);
    }
    s.dt = j.value("dt", 0.05);
    if (j.contains("drive")) {
      const auto& d = j["drive"];
      detail::reject_unknown_keys(d, {"wheel_radius", "axle_length", "v_max", "w_max"}, "scenario.drive");
      s.drive.wheel_radius = d.value("wheel_radius", s.drive.wheel_radius);
      s.drive.axle_length = d.value("axle_length", s.drive.axle_length);
      s.drive.v_max = d.value("v_max", s.drive.v_max);
      s.drive.w_max = d.value("w_max", s.drive.w_max);
    }
    if (j.contains("input_limits")) {
      const auto& l = j["input_limits"];
      detail::reject_unknown_keys(l, {"dv_max", "dw_max"}, "scenario.input_limits");
      s.dv_max = l.value("dv_max", s.dv_max);
      s.dw_max = l.value("dw_max", s.dw_max);
    }
    s.max_ticks = j.value("max_ticks", 6000L);
    s.semantics.default_terrain_multiplier = j.value("default_terrain_multiplier", 2.0);
    if (j.contains("terrain_multipliers")) {
      for (const auto& [k, v] : j["terrain_multipliers"].items()) s.semantics.keyword_multipliers[k] = v.get<double>();
    }
    s.document = j;

    // Validation
    if (s.robots.size() != 2) throw Error(ErrorCode::InvalidScenario, "exactly two robots required");
    if (s.robots[0].id == s.robots[1].id) throw Error(ErrorCode::InvalidScenario, "robot ids must differ");
    for (const auto& r : s.robots) {
      if (!s.map.is_free(r.start) || !s.map.is_free(r.goal)) {
        throw Error(ErrorCode::InvalidScenario, "robot " + r.id + " start/goal must be free cells");
      }
      if (!(r.cruise_speed > 0.0)) throw Error(ErrorCode::InvalidScenario, "cruise_speed must be > 0");
    }
    if (s.workspace_cells.empty()) throw Error(ErrorCode::InvalidScenario, "workspace_cells is empty");
    for (const auto& c : s.workspace_cells) {
      if (!s.map.is_free(c)) throw Error(ErrorCode::InvalidScenario, "workspace cell " + to_string(c) + " not free");
    }
    for (const auto& c : s.pathway_cells) {
      if (!s.map.is_free(c)) throw Error(ErrorCode::InvalidScenario, "pathway cell " + to_string(c) + " not free");
    }
    if (!(s.dt > 0.0) || !(s.dwell_s >= 0.0) || s.max_ticks < 1) {
      throw Error(ErrorCode::InvalidScenario, "dt, dwell_s or max_ticks out of range");
    }
    if (!(s.thresholds.proximity_m > 0.0) || !(s.thresholds.off_path_m > 0.0) || !(s.thresholds.arrival_m > 0.0)) {
      throw Error(ErrorCode::InvalidScenario, "thresholds must be > 0");
    }
    if (!(s.drive.v_max > 0.0) || !(s.drive.w_max > 0.0) || !(s.dv_max > 0.0) || !(s.dw_max > 0.0)) {
      throw Error(ErrorCode::InvalidScenario, "velocity limits must be > 0");
    }
    s.drive.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidScenario, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidScenario) throw;
    throw Error(ErrorCode::InvalidScenario, e.what());
  }
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  const nlohmann::json j = load_json_file(path, ErrorCode::InvalidScenario);
  return scenario_from_json(j, path.parent_path());
}

}  // namespace interocept
