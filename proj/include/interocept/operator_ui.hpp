#pragma once

// Client-side contract of the operator console: key mapping, repeat
// throttling, feedback validation and frame intake. A browser front end
// reproduces exactly this logic against the control service endpoints.

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "interocept/grid_map.hpp"
#include "interocept/operator_command.hpp"

namespace interocept {

enum class ConnectionState { Connecting, Live, Dropped };

struct InputScaling {
  double dv_per_press = 0.1;  // m/s
  double dw_per_press = 0.2;  // rad/s
};

struct UiState {
  std::optional<nlohmann::json> latest_frame;
  std::vector<CellCoord> selected_cells;
  InputScaling input_scaling;
  ConnectionState connection = ConnectionState::Connecting;
  std::string robot_id = "B";
  std::string banner;  // error or alert text; empty when nothing to show
  std::string notice;  // transient toast
};

/// Arrow keys and WASD; anything else maps to nothing.
inline std::optional<VelocityIncrementCmd> increment_for_key(const std::string& key, const std::string& robot_id,
                                                             const InputScaling& s) {
  VelocityIncrementCmd cmd{robot_id, 0.0, 0.0, InputSource::Keyboard};
  if (key == "ArrowUp" || key == "w" || key == "W") {
    cmd.dv = s.dv_per_press;
  } else if (key == "ArrowDown" || key == "s" || key == "S") {
    cmd.dv = -s.dv_per_press;
  } else if (key == "ArrowLeft" || key == "a" || key == "A") {
    cmd.dw = s.dw_per_press;
  } else if (key == "ArrowRight" || key == "d" || key == "D") {
    cmd.dw = -s.dw_per_press;
  } else {
    return std::nullopt;
  }
  return cmd;
}

/// At most one command per key per tick period, however fast the keyboard repeats.
class KeyThrottle {
 public:
  explicit KeyThrottle(double period_s) : period_s_(period_s) {}

  bool allow(const std::string& key, double now_s) {
    auto it = last_.find(key);
    if (it != last_.end() && now_s - it->second < period_s_ - 1e-12) return false;
    last_[key] = now_s;
    return true;
  }

 private:
  double period_s_;
  std::map<std::string, double> last_;
};

/// Schema check for an incoming frame; returns the first problem found.
inline std::optional<std::string> frame_schema_error(const nlohmann::json& f) {
  if (!f.is_object()) return "frame is not an object";
  for (const char* key : {"tick", "phase", "task_state", "robots", "alerts"}) {
    if (!f.contains(key)) return std::string("frame lacks '") + key + "'";
  }
  if (!f["tick"].is_number_integer()) return "tick is not an integer";
  if (!f["robots"].is_array()) return "robots is not an array";
  for (const auto& r : f["robots"]) {
    if (!r.is_object() || !r.contains("id") || !r.contains("pose") || !r.contains("auto") || !r.contains("fused")) {
      return "robot entry lacks id, pose, auto or fused";
    }
    for (const char* k : {"x", "y", "theta"}) {
      if (!r["pose"].contains(k) || !r["pose"][k].is_number()) return std::string("pose lacks numeric ") + k;
    }
  }
  if (!f["alerts"].is_array()) return "alerts is not an array";
  return std::nullopt;
}

/// Accepts a raw stream message. A malformed frame raises the banner and
/// keeps the previous scene.
inline bool receive_frame(UiState& ui, const std::string& message) {
  nlohmann::json f;
  try {
    f = nlohmann::json::parse(message);
  } catch (const nlohmann::json::parse_error&) {
    ui.banner = "malformed frame";
    return false;
  }
  if (auto err = frame_schema_error(f)) {
    ui.banner = "malformed frame: " + *err;
    return false;
  }
  ui.connection = ConnectionState::Live;
  ui.banner.clear();
  const auto& alerts = f["alerts"];
  if (!alerts.empty()) {
    const auto& a = alerts.front();
    ui.banner = "proximity " + a.value("robot_a", std::string("?")) + "-" + a.value("robot_b", std::string("?")) +
                " " + std::to_string(a.value("distance_m", 0.0)) + " m";
  }
  ui.latest_frame = std::move(f);
  return true;
}

/// Key press to command. Nothing is sent unless the connection is live.
inline std::optional<OperatorCommand> press_key(UiState& ui, KeyThrottle& throttle, const std::string& key,
                                                double now_s) {
  auto inc = increment_for_key(key, ui.robot_id, ui.input_scaling);
  if (!inc) return std::nullopt;
  if (ui.connection != ConnectionState::Live) {
    ui.notice = "connection dropped; input discarded";
    return std::nullopt;
  }
  if (!throttle.allow(key, now_s)) return std::nullopt;
  return OperatorCommand{*inc, "console", -1};
}

/// Feedback form submission. Empty text is rejected locally; zero cells
/// is allowed and ends up episodic on the server.
inline std::optional<OperatorCommand> submit_feedback(UiState& ui, const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    ui.notice = "feedback text is empty";
    return std::nullopt;
  }
  if (ui.connection != ConnectionState::Live) {
    ui.notice = "connection dropped; feedback not sent";
    return std::nullopt;
  }
  return OperatorCommand{SemanticFeedbackCmd{text, ui.selected_cells}, "console", -1};
}

/// Surfaces the server's acknowledgment as a toast.
inline void on_ack(UiState& ui, const nlohmann::json& ack) {
  if (!ack.value("accepted", false)) {
    ui.notice = "rejected: " + ack.value("reason", std::string{});
  } else if (ack.value("clamped", false)) {
    ui.notice = "increment clamped";
  }
}

}  // namespace interocept
