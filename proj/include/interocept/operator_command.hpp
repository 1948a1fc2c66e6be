#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "interocept/error.hpp"
#include "interocept/grid_map.hpp"
#include "interocept/shared_control.hpp"
#include "interocept/task_hypergraph.hpp"

namespace interocept {

struct VelocityIncrementCmd {
  std::string robot_id;
  double dv = 0.0;
  double dw = 0.0;
  InputSource source = InputSource::Api;
};
struct PauseCmd {};
struct ResumeCmd {};
struct SemanticFeedbackCmd {
  std::string text;
  std::vector<CellCoord> anchor_cells;
};
struct SetThresholdCmd {
  double meters = 0.0;
};
struct SetTaskStateCmd {
  std::optional<Availability> availability;
  std::optional<PathwayOccupancy> occupancy;
};

using CommandKind =
    std::variant<VelocityIncrementCmd, PauseCmd, ResumeCmd, SemanticFeedbackCmd, SetThresholdCmd, SetTaskStateCmd>;

struct OperatorCommand {
  CommandKind kind;
  std::string client_id;
  long received_tick = -1;  // tick at which the command is applied; -1 = next tick
};

struct CommandAck {
  bool accepted = false;
  std::string reason;
  bool clamped = false;
  long applies_at_tick = -1;
};

inline nlohmann::ordered_json command_to_json(const OperatorCommand& cmd) {
  nlohmann::ordered_json j;
  std::visit(
      [&j](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, VelocityIncrementCmd>) {
          j["kind"] = "velocity_increment";
          j["robot_id"] = k.robot_id;
          j["dv"] = k.dv;
          j["dw"] = k.dw;
          j["source"] = to_string(k.source);
        } else if constexpr (std::is_same_v<T, PauseCmd>) {
          j["kind"] = "pause";
        } else if constexpr (std::is_same_v<T, ResumeCmd>) {
          j["kind"] = "resume";
        } else if constexpr (std::is_same_v<T, SemanticFeedbackCmd>) {
          j["kind"] = "semantic_feedback";
          j["text"] = k.text;
          nlohmann::ordered_json cells = nlohmann::ordered_json::array();
          for (const auto& c : k.anchor_cells) cells.push_back({c.col, c.row});
          j["anchor_cells"] = cells;
        } else if constexpr (std::is_same_v<T, SetThresholdCmd>) {
          j["kind"] = "set_threshold";
          j["meters"] = k.meters;
        } else {
          j["kind"] = "set_task_state";
          if (k.availability) j["availability"] = to_string(*k.availability);
          if (k.occupancy) j["occupancy"] = to_string(*k.occupancy);
        }
      },
      cmd.kind);
  j["client_id"] = cmd.client_id;
  j["received_tick"] = cmd.received_tick;
  return j;
}

template <typename Json>
OperatorCommand command_from_json(const Json& j) {
  auto fail = [](const std::string& why) -> OperatorCommand { throw Error(ErrorCode::MalformedCommand, why); };
  if (!j.is_object()) return fail("command must be a JSON object");
  auto number = [&j](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw Error(ErrorCode::MalformedCommand, std::string(key) + " must be a number");
    const double v = j[key].template get<double>();
    if (!std::isfinite(v)) throw Error(ErrorCode::MalformedCommand, std::string(key) + " must be finite");
    return v;
  };
  try {
    OperatorCommand cmd;
    cmd.client_id = j.contains("client_id") ? j["client_id"].template get<std::string>() : std::string("api");
    cmd.received_tick = j.contains("received_tick") ? j["received_tick"].template get<long>() : -1L;
    if (!j.contains("kind") || !j["kind"].is_string()) return fail("missing 'kind'");
    const std::string kind = j["kind"].template get<std::string>();
    if (kind == "velocity_increment") {
      if (!j.contains("robot_id") || !j["robot_id"].is_string()) return fail("velocity_increment needs robot_id");
      VelocityIncrementCmd v;
      v.robot_id = j["robot_id"].template get<std::string>();
      v.dv = number("dv", 0.0);
      v.dw = number("dw", 0.0);
      if (j.contains("source")) v.source = input_source_from_string(j["source"].template get<std::string>());
      cmd.kind = v;
    } else if (kind == "pause") {
      cmd.kind = PauseCmd{};
    } else if (kind == "resume") {
      cmd.kind = ResumeCmd{};
    } else if (kind == "semantic_feedback") {
      if (!j.contains("text") || !j["text"].is_string()) return fail("semantic_feedback needs text");
      SemanticFeedbackCmd f;
      f.text = j["text"].template get<std::string>();
      if (j.contains("anchor_cells")) {
        for (const auto& c : j["anchor_cells"]) {
          if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() || !c[1].is_number_integer()) {
            return fail("anchor cells must be [col,row]");
          }
          f.anchor_cells.push_back({c[0].template get<int>(), c[1].template get<int>()});
        }
      }
      cmd.kind = f;
    } else if (kind == "set_threshold") {
      if (!j.contains("meters")) return fail("set_threshold needs meters");
      cmd.kind = SetThresholdCmd{number("meters", 0.0)};
    } else if (kind == "set_task_state") {
      SetTaskStateCmd s;
      if (j.contains("availability")) s.availability = availability_from_string(j["availability"].template get<std::string>());
      if (j.contains("occupancy")) s.occupancy = occupancy_from_string(j["occupancy"].template get<std::string>());
      cmd.kind = s;
    } else {
      return fail("unknown kind '" + kind + "'");
    }
    return cmd;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedCommand) throw;
    throw Error(ErrorCode::MalformedCommand, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::MalformedCommand, e.what());
  }
}

inline nlohmann::json ack_to_json(const CommandAck& ack) {
  nlohmann::json j{{"accepted", ack.accepted}, {"clamped", ack.clamped}};
  if (!ack.reason.empty()) j["reason"] = ack.reason;
  if (ack.applies_at_tick >= 0) j["applies_at_tick"] = ack.applies_at_tick;
  return j;
}

}  // namespace interocept
