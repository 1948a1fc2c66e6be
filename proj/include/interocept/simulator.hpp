#pragma once

// Tick loop around the scenario engine. Operator commands are queued by
// application tick and drained in arrival order; every tick appends one
// self-contained JSON line to the run log.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "interocept/error.hpp"
#include "interocept/kinematics.hpp"
#include "interocept/operator_command.hpp"
#include "interocept/scenario.hpp"
#include "interocept/scenario_engine.hpp"
#include "interocept/semantics.hpp"
#include "interocept/shared_control.hpp"
#include "interocept/tracking.hpp"

namespace interocept {

template <typename T>
using ById = std::vector<std::pair<std::string, T>>;

namespace detail {

template <typename T>
std::vector<std::string> ids_of(const ById<T>& items) {
  std::vector<std::string> ids;
  for (const auto& [id, _] : items) ids.push_back(id);
  return ids;
}

}  // namespace detail

/// One run-log record. Robots are emitted in pose order; every other
/// per-robot argument must carry exactly the same ids.
inline nlohmann::ordered_json log_frame(long tick, double t_s, const ById<RobotPose>& poses,
                                        const ById<AutonomousCommand>& auto_cmds,
                                        const ById<FusedCommand>& fused_cmds, const ById<WheelSpeeds>& wheels,
                                        const std::vector<ProximityAlert>& alerts, ScenarioPhase phase,
                                        const TaskState& task_state) {
  const auto ids = detail::ids_of(poses);
  const std::set<std::string> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) throw Error(ErrorCode::InconsistentIds, "duplicate robot id in poses");
  auto same = [&ids](const std::vector<std::string>& other) {
    return std::is_permutation(ids.begin(), ids.end(), other.begin(), other.end());
  };
  if (!same(detail::ids_of(auto_cmds)) || !same(detail::ids_of(fused_cmds)) || !same(detail::ids_of(wheels))) {
    throw Error(ErrorCode::InconsistentIds, "robot ids differ between poses and commands");
  }
  for (const auto& a : alerts) {
    if (unique.count(a.robot_a) == 0 || unique.count(a.robot_b) == 0) {
      throw Error(ErrorCode::InconsistentIds, "alert names an unknown robot");
    }
  }
  auto find = [](const auto& items, const std::string& id) -> const auto& {
    return std::find_if(items.begin(), items.end(), [&id](const auto& p) { return p.first == id; })->second;
  };

  nlohmann::ordered_json frame;
  frame["tick"] = tick;
  frame["t_s"] = t_s;
  frame["phase"] = to_string(phase);
  frame["task_state"] = {{"availability", to_string(task_state.availability)},
                         {"occupancy", to_string(task_state.occupancy)}};
  nlohmann::ordered_json robots = nlohmann::ordered_json::array();
  for (const auto& [id, pose] : poses) {
    const auto& a = find(auto_cmds, id);
    const auto& f = find(fused_cmds, id);
    const auto& wh = find(wheels, id);
    nlohmann::ordered_json r;
    r["id"] = id;
    r["pose"] = {{"x", pose.x}, {"y", pose.y}, {"theta", pose.theta}};
    r["auto"] = {{"v", a.v}, {"w", a.w}};
    r["fused"] = {{"v", f.v}, {"w", f.w}};
    r["wheels"] = {{"l", wh.left}, {"r", wh.right}};
    robots.push_back(std::move(r));
  }
  frame["robots"] = std::move(robots);
  nlohmann::ordered_json alert_list = nlohmann::ordered_json::array();
  for (const auto& a : alerts) {
    alert_list.push_back({{"robot_a", a.robot_a},
                          {"robot_b", a.robot_b},
                          {"distance_m", a.distance_m},
                          {"threshold_m", a.threshold_m}});
  }
  frame["alerts"] = std::move(alert_list);
  return frame;
}

struct RobotDissonance {
  std::string robot_id;
  DissonanceRecord record;
};

class Simulator {
 public:
  explicit Simulator(Scenario scenario, std::string episodic_path = {})
      : world_(make_world(std::move(scenario))),
        proximity_m_(world_.scenario.thresholds.proximity_m),
        episodic_path_(std::move(episodic_path)) {
    ById<RobotPose> poses;
    ById<AutonomousCommand> autos;
    ById<FusedCommand> fused;
    ById<WheelSpeeds> wheels;
    std::vector<RobotDissonance> diss;
    for (const auto& r : world_.robots) {
      poses.emplace_back(r.id, r.pose);
      autos.emplace_back(r.id, AutonomousCommand{});
      fused.emplace_back(r.id, FusedCommand{});
      wheels.emplace_back(r.id, WheelSpeeds{});
      diss.push_back({r.id, {}});
    }
    std::vector<RobotPosition> positions;
    for (const auto& r : world_.robots) positions.push_back({r.id, r.pose.x, r.pose.y});
    const auto alerts = check_proximity(positions, proximity_m_, 0);
    emit(poses, autos, fused, wheels, alerts, diss, {}, true);
  }

  long tick() const noexcept { return tick_; }
  ScenarioPhase phase() const noexcept { return world_.phase; }
  const World& world() const noexcept { return world_; }
  const Scenario& scenario() const noexcept { return world_.scenario; }
  double proximity_threshold() const noexcept { return proximity_m_; }
  bool done() const noexcept { return world_.phase == ScenarioPhase::Done; }
  bool finished() const noexcept { return done() || tick_ >= world_.scenario.max_ticks; }

  const std::vector<std::string>& log_lines() const noexcept { return lines_; }
  const nlohmann::ordered_json& latest_frame() const noexcept { return latest_; }
  const std::vector<RobotDissonance>& dissonance_log() const noexcept { return dissonance_; }
  const std::vector<PoseSample>& pose_log() const noexcept { return pose_samples_; }
  const EpisodicArchive& archive() const noexcept { return archive_; }

  std::string log_jsonl() const {
    std::string out;
    for (const auto& l : lines_) {
      out += l;
      out += '\n';
    }
    return out;
  }

  std::vector<DissonanceRecord> dissonance_records() const {
    std::vector<DissonanceRecord> out;
    for (const auto& d : dissonance_) out.push_back(d.record);
    return out;
  }

  /// Validates, clamps and queues a command. Commands addressed to a tick
  /// that has already run are moved to the next tick.
  CommandAck submit(OperatorCommand cmd) {
    CommandAck ack;
    if (auto* inc = std::get_if<VelocityIncrementCmd>(&cmd.kind)) {
      if (world_.scenario.robot_index(inc->robot_id) < 0) {
        throw Error(ErrorCode::UnknownRobot, "unknown robot '" + inc->robot_id + "'");
      }
      if (!std::isfinite(inc->dv) || !std::isfinite(inc->dw)) {
        throw Error(ErrorCode::MalformedCommand, "increment must be finite");
      }
      HumanIncrement h{inc->dv, inc->dw, 0, inc->source};
      ack.clamped = clamp_increment(h, world_.scenario.limits());
      inc->dv = h.dv;
      inc->dw = h.dw;
    } else if (const auto* fb = std::get_if<SemanticFeedbackCmd>(&cmd.kind)) {
      if (fb->text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(ErrorCode::MalformedCommand, "feedback text is empty");
      }
      if (fb->text.size() > kMaxFeedbackChars) throw Error(ErrorCode::MalformedCommand, "feedback text too long");
      for (const auto& c : fb->anchor_cells) {
        if (!world_.scenario.map.in_bounds(c)) {
          throw Error(ErrorCode::MalformedCommand, "anchor " + to_string(c) + " out of bounds");
        }
      }
    } else if (const auto* th = std::get_if<SetThresholdCmd>(&cmd.kind)) {
      if (!(th->meters > 0.0) || !std::isfinite(th->meters)) {
        throw Error(ErrorCode::MalformedCommand, "threshold must be a positive number");
      }
    } else if (const auto* st = std::get_if<SetTaskStateCmd>(&cmd.kind)) {
      if (!st->availability && !st->occupancy) {
        throw Error(ErrorCode::MalformedCommand, "set_task_state needs availability or occupancy");
      }
    }
    if (cmd.received_tick <= tick_) cmd.received_tick = tick_ + 1;
    ack.accepted = true;
    ack.applies_at_tick = cmd.received_tick;
    auto pos = std::upper_bound(queue_.begin(), queue_.end(), cmd.received_tick,
                                [](long t, const OperatorCommand& c) { return t < c.received_tick; });
    queue_.insert(pos, std::move(cmd));
    return ack;
  }

  /// Runs one tick and returns its log line.
  const std::string& step() {
    const long k = tick_ + 1;
    const Scenario& sc = world_.scenario;
    const std::size_t n = world_.robots.size();

    // 1. commands due at this tick, in arrival order
    std::vector<OperatorCommand> applied;
    while (!queue_.empty() && queue_.front().received_tick <= k) {
      applied.push_back(std::move(queue_.front()));
      queue_.erase(queue_.begin());
    }
    std::vector<std::vector<HumanIncrement>> increments(n);
    for (const auto& cmd : applied) apply(cmd, k, increments);

    // 2-3. plans and autonomous commands
    refresh_plans(world_);
    const StepOutput out = step_scenario(world_, sc.dt, k);

    // 4-6. fuse, record, convert, integrate
    const CommandLimits limits = sc.limits();
    const CommandLimits held_limits{0.0, 0.0, limits.dv_max, limits.dw_max};
    ById<RobotPose> poses;
    ById<AutonomousCommand> autos;
    ById<FusedCommand> fused_cmds;
    ById<WheelSpeeds> wheels;
    std::vector<RobotDissonance> diss;
    for (std::size_t i = 0; i < n; ++i) {
      RobotState& r = world_.robots[i];
      const AutonomousCommand& a = out.commands[i];
      FusedCommand f = fuse(a, increments[i], out.held[i] ? held_limits : limits);
      const DissonanceRecord rec = record_dissonance(a, f, increments[i], r.odometer_m, limits);
      const WheelSpeeds ws = to_wheel_speeds(f.v, f.w, sc.drive);
      r.pose = integrate_unicycle(r.pose, f.v, f.w, sc.dt);
      r.odometer_m += std::abs(f.v) * sc.dt;
      if (auto c = sc.map.cell_at(r.pose.x, r.pose.y); c && sc.map.is_free(*c)) r.last_free_cell = *c;
      poses.emplace_back(r.id, r.pose);
      autos.emplace_back(r.id, a);
      fused_cmds.emplace_back(r.id, f);
      wheels.emplace_back(r.id, ws);
      diss.push_back({r.id, rec});
      pose_samples_.push_back({k, r.id, r.pose.x, r.pose.y});
    }

    // 7. proximity
    std::vector<RobotPosition> positions;
    for (const auto& r : world_.robots) positions.push_back({r.id, r.pose.x, r.pose.y});
    const auto alerts = check_proximity(positions, proximity_m_, k);

    tick_ = k;
    for (const auto& d : diss) dissonance_.push_back(d);
    emit(poses, autos, fused_cmds, wheels, alerts, diss, applied, false);
    return lines_.back();
  }

  void run() {
    while (!finished()) step();
  }

 private:
  void apply(const OperatorCommand& cmd, long k, std::vector<std::vector<HumanIncrement>>& increments) {
    if (const auto* inc = std::get_if<VelocityIncrementCmd>(&cmd.kind)) {
      const int i = world_.scenario.robot_index(inc->robot_id);
      increments[static_cast<std::size_t>(i)].push_back({inc->dv, inc->dw, k, inc->source});
    } else if (const auto* fb = std::get_if<SemanticFeedbackCmd>(&cmd.kind)) {
      ingest_feedback(*fb, k);
    } else if (const auto* th = std::get_if<SetThresholdCmd>(&cmd.kind)) {
      proximity_m_ = th->meters;
    } else if (const auto* st = std::get_if<SetTaskStateCmd>(&cmd.kind)) {
      std::optional<PathwayOccupancy> occupancy = st->occupancy;
      // The receiver may already be inside the workspace; it cannot be re-blocked.
      const int p = phase_index(world_.phase);
      if (occupancy == PathwayOccupancy::Occupied && p >= phase_index(ScenarioPhase::BEnter) &&
          p < phase_index(ScenarioPhase::Done)) {
        occupancy.reset();
      }
      if (occupancy) world_.occupancy_override_tick = k;
      world_.scenario.hypergraph.set_task_state(st->availability, occupancy);
    }
  }

  void ingest_feedback(const SemanticFeedbackCmd& fb, long k) {
    std::vector<Triple> triples = extract_triples(fb.text, k);
    if (triples.empty()) {
      // verbless notes ("slippery ramp") are classified on their words alone
      triples.push_back({"", "", fb.text, fb.text, k});
    }
    for (const auto& t : triples) {
      const AttributeClass attr = classify_attribute(t);
      if (attr.kind != AttributeKind::Episodic && fb.anchor_cells.empty()) {
        archive(EpisodicRecord{k, fb.text, t});
        continue;
      }
      const std::size_t before = archive_.size();
      encode_to_hypergraph(world_.scenario.hypergraph, attr, t, fb.anchor_cells, archive_, world_.scenario.semantics);
      if (archive_.size() > before && !episodic_path_.empty()) {
        archive_.append_to_file(episodic_path_, archive_.records().back());
      }
    }
  }

  void archive(EpisodicRecord rec) {
    archive_.append(rec);
    if (!episodic_path_.empty()) archive_.append_to_file(episodic_path_, rec);
  }

  void emit(const ById<RobotPose>& poses, const ById<AutonomousCommand>& autos, const ById<FusedCommand>& fused,
            const ById<WheelSpeeds>& wheels, const std::vector<ProximityAlert>& alerts,
            const std::vector<RobotDissonance>& diss, const std::vector<OperatorCommand>& applied, bool initial) {
    const Scenario& sc = world_.scenario;
    nlohmann::ordered_json frame = log_frame(tick_, static_cast<double>(tick_) * sc.dt, poses, autos, fused, wheels,
                                             alerts, world_.phase, sc.hypergraph.state());
    frame["hyperedge_count"] = sc.hypergraph.edge_count();
    nlohmann::ordered_json d = nlohmann::ordered_json::array();
    for (const auto& rd : diss) {
      d.push_back({{"robot", rd.robot_id},
                   {"intensity", rd.record.intensity},
                   {"dissonance", rd.record.dissonance},
                   {"station_m", rd.record.station_m}});
    }
    frame["dissonance"] = std::move(d);
    nlohmann::ordered_json cmds = nlohmann::ordered_json::array();
    for (const auto& c : applied) cmds.push_back(command_to_json(c));
    frame["commands"] = std::move(cmds);
    if (initial) {
      nlohmann::ordered_json ws = nlohmann::ordered_json::array();
      for (const auto& c : sc.workspace_cells) ws.push_back({c.col, c.row});
      frame["meta"] = {{"dt", sc.dt},
                       {"cell_size", sc.map.cell_size()},
                       {"drive",
                        {{"wheel_radius", sc.drive.wheel_radius},
                         {"axle_length", sc.drive.axle_length},
                         {"v_max", sc.drive.v_max},
                         {"w_max", sc.drive.w_max}}},
                       {"deliverer", sc.deliverer().id},
                       {"receiver", sc.receiver().id},
                       {"workspace_cells", ws}};
    }
    lines_.push_back(frame.dump());
    latest_ = std::move(frame);
  }

  World world_;
  long tick_ = 0;
  double proximity_m_;
  std::string episodic_path_;
  std::vector<OperatorCommand> queue_;
  std::vector<std::string> lines_;
  nlohmann::ordered_json latest_;
  std::vector<RobotDissonance> dissonance_;
  std::vector<PoseSample> pose_samples_;
  EpisodicArchive archive_;
};

/// Loads a command trace: either a JSON array of commands or a run log
/// (JSON lines), whose per-frame "commands" are replayed in order, or one
/// bare command per line.
inline std::vector<OperatorCommand> load_command_trace(const std::string& text) {
  std::vector<OperatorCommand> out;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return out;
  if (text[first] == '[') {
    for (const auto& c : parse_json_text(text, "inputs")) out.push_back(command_from_json(c));
    return out;
  }
  std::size_t start = 0;
  std::size_t line_no = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      const auto frame = parse_json_text(line, "inputs line " + std::to_string(line_no));
      if (frame.contains("kind")) {
        out.push_back(command_from_json(frame));
      } else if (frame.contains("commands")) {
        for (const auto& c : frame["commands"]) out.push_back(command_from_json(c));
      }
    }
    start = end + 1;
  }
  return out;
}

}  // namespace interocept
