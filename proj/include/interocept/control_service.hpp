#pragma once

// Hosts the simulator on a single loop thread. HTTP and WebSocket handlers
// only enqueue commands, read the published snapshot, or hand a read-only
// request to the loop thread and wait for its answer.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <json.hpp>

#include "interocept/error.hpp"
#include "interocept/operator_command.hpp"
#include "interocept/projection.hpp"
#include "interocept/scenario.hpp"
#include "interocept/simulator.hpp"
#include "interocept/tracking.hpp"
#include "interocept/velocity_model.hpp"
#include "interocept/websocket.hpp"

// after Eigen: resolv.h, pulled in by httplib, defines a `_res` macro
#include <httplib.h>

namespace interocept {

enum class Artifact { Heatmap, DissonanceField, EmbeddingScatter, Log };

inline Artifact artifact_from_string(const std::string& s) {
  if (s == "heatmap") return Artifact::Heatmap;
  if (s == "dissonance") return Artifact::DissonanceField;
  if (s == "embeddings") return Artifact::EmbeddingScatter;
  if (s == "log") return Artifact::Log;
  throw Error(ErrorCode::InvalidArgument, "unknown artifact '" + s + "'");
}

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;          // HTTP; the stream listens on port + 1 (or any free port when port is 0)
  double time_scale = 1.0;  // wall-clock seconds per simulated second
  std::string log_path;     // complete on-disk run log (optional)
  std::string episodic_path;
  std::optional<VelocityModel> model;  // source of the embedding scatter
  int field_time_bins = 20;
  int field_station_bins = 20;
};

/// Parses "host:port" or "host" (keeping the default port).
inline void apply_bind_override(ServiceConfig& cfg, const std::string& bind) {
  if (bind.empty()) return;
  const auto colon = bind.rfind(':');
  if (colon == std::string::npos) {
    cfg.host = bind;
    return;
  }
  cfg.host = bind.substr(0, colon);
  try {
    cfg.port = std::stoi(bind.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::BindFailure, "bad bind address '" + bind + "'");
  }
}

/// Produces an artifact payload from the simulator's recorded data.
inline std::string snapshot(const Simulator& sim, Artifact kind, const ServiceConfig& cfg) {
  switch (kind) {
    case Artifact::Heatmap: {
      if (sim.pose_log().empty()) throw Error(ErrorCode::NoData, "no completed ticks");
      return heatmap_to_json(visit_heatmap(sim.pose_log(), sim.scenario().map)).dump();
    }
    case Artifact::DissonanceField: {
      if (sim.dissonance_log().empty()) throw Error(ErrorCode::NoData, "no completed ticks");
      const auto records = sim.dissonance_records();
      return dissonance_field_to_json(dissonance_field(records, cfg.field_time_bins, cfg.field_station_bins)).dump();
    }
    case Artifact::EmbeddingScatter: {
      if (!cfg.model) throw Error(ErrorCode::NoData, "no velocity model loaded");
      const auto all = cfg.model->store.all();
      if (all.size() < 2) throw Error(ErrorCode::NoData, "fewer than two embeddings");
      return embedding_scatter_json(all).dump();
    }
    case Artifact::Log:
      return sim.log_jsonl();
  }
  throw Error(ErrorCode::InvalidArgument, "artifact");
}

class ControlService {
 public:
  ControlService(Scenario scenario, ServiceConfig cfg)
      : cfg_(std::move(cfg)), scenario_(scenario), sim_(std::move(scenario), cfg_.episodic_path) {
    if (!(cfg_.time_scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "time_scale must be > 0");
    if (!cfg_.log_path.empty()) {
      log_.open(cfg_.log_path, std::ios::trunc);
      if (!log_) throw Error(ErrorCode::InvalidArgument, "cannot write " + cfg_.log_path);
    }
    publish_locked_free();
  }
  ControlService(const ControlService&) = delete;
  ControlService& operator=(const ControlService&) = delete;
  ~ControlService() { stop(); }

  void start() {
    install_routes();
    // httplib's default adds SO_REUSEPORT, which would let a second service share the port
    http_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
    });
    if (cfg_.port == 0) {
      http_port_ = http_.bind_to_any_port(cfg_.host);
    } else if (http_.bind_to_port(cfg_.host, cfg_.port)) {
      http_port_ = cfg_.port;
    }
    if (http_port_ <= 0) {
      throw Error(ErrorCode::BindFailure, "cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
    }
    try {
      hub_.start(cfg_.host, cfg_.port == 0 ? 0 : cfg_.port + 1);
    } catch (...) {
      http_.stop();
      throw;
    }
    running_ = true;
    http_thread_ = std::thread([this] { http_.listen_after_bind(); });
    loop_thread_ = std::thread([this] { loop(); });
    hub_.publish(stream_message());
  }

  void stop() {
    if (!running_.exchange(false)) return;
    wake_.notify_all();
    if (loop_thread_.joinable()) loop_thread_.join();
    http_.stop();
    if (http_thread_.joinable()) http_thread_.join();
    hub_.stop();
  }

  int http_port() const noexcept { return http_port_; }
  int stream_port() const noexcept { return hub_.port(); }
  bool paused() const noexcept { return paused_; }

  /// Validates (same rules as the simulator's ingest) and enqueues;
  /// pause/resume also take effect immediately.
  CommandAck handle_command(OperatorCommand cmd) {
    if (const auto* inc = std::get_if<VelocityIncrementCmd>(&cmd.kind)) {
      if (scenario_.robot_index(inc->robot_id) < 0) {
        throw Error(ErrorCode::UnknownRobot, "unknown robot '" + inc->robot_id + "'");
      }
    }
    CommandAck ack;
    std::lock_guard lock(mutex_);
    cmd.received_tick = published_tick_ + 1;
    ack = validate(cmd);
    if (std::holds_alternative<PauseCmd>(cmd.kind)) paused_ = true;
    if (std::holds_alternative<ResumeCmd>(cmd.kind)) paused_ = false;
    inbox_.push_back(std::move(cmd));
    wake_.notify_all();
    return ack;
  }

  /// The latest frame plus sequence number, server time and pause flag.
  nlohmann::ordered_json state() const {
    std::lock_guard lock(mutex_);
    nlohmann::ordered_json j = latest_frame_;
    j["seq"] = seq_;
    j["server_time"] = server_time_;
    j["paused"] = paused_.load();
    return j;
  }

  /// Scenario document with the hypergraph in its current form.
  nlohmann::json scenario_json() {
    return nlohmann::json::parse(on_loop([](const Simulator& sim) {
      nlohmann::json doc = sim.scenario().document;
      doc["hypergraph"] = hypergraph_to_json(sim.scenario().hypergraph);
      return doc.dump();
    }));
  }

  std::string artifact(Artifact kind) {
    return on_loop([this, kind](const Simulator& sim) { return snapshot(sim, kind, cfg_); });
  }

  /// Runs the loop's pending work and one tick regardless of pause state.
  /// Only valid before start(); used to drive the service deterministically.
  void step_now() {
    if (running_) throw Error(ErrorCode::InvalidArgument, "step_now is only available before start()");
    tick_once();
  }

 private:
  struct Request {
    std::function<std::string(const Simulator&)> fn;
    std::promise<std::string> result;
  };

  CommandAck validate(OperatorCommand& cmd) const {
    CommandAck ack;
    if (auto* inc = std::get_if<VelocityIncrementCmd>(&cmd.kind)) {
      if (!std::isfinite(inc->dv) || !std::isfinite(inc->dw)) {
        throw Error(ErrorCode::MalformedCommand, "increment must be finite");
      }
      HumanIncrement h{inc->dv, inc->dw, 0, inc->source};
      ack.clamped = clamp_increment(h, scenario_.limits());
      inc->dv = h.dv;
      inc->dw = h.dw;
    } else if (const auto* fb = std::get_if<SemanticFeedbackCmd>(&cmd.kind)) {
      if (fb->text.find_first_not_of(" \t\r\n") == std::string::npos) {
        throw Error(ErrorCode::MalformedCommand, "feedback text is empty");
      }
      if (fb->text.size() > kMaxFeedbackChars) throw Error(ErrorCode::MalformedCommand, "feedback text too long");
      for (const auto& c : fb->anchor_cells) {
        if (!scenario_.map.in_bounds(c)) throw Error(ErrorCode::MalformedCommand, "anchor out of bounds");
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
    ack.accepted = true;
    ack.applies_at_tick = cmd.received_tick;
    return ack;
  }

  std::string on_loop(std::function<std::string(const Simulator&)> fn) {
    if (!running_) return fn(sim_);
    auto req = std::make_shared<Request>();
    req->fn = std::move(fn);
    auto fut = req->result.get_future();
    {
      std::lock_guard lock(mutex_);
      requests_.push_back(req);
    }
    wake_.notify_all();
    return fut.get();
  }

  void serve_requests() {
    std::deque<std::shared_ptr<Request>> pending;
    {
      std::lock_guard lock(mutex_);
      pending.swap(requests_);
    }
    for (auto& r : pending) {
      try {
        r->result.set_value(r->fn(sim_));
      } catch (...) {
        r->result.set_exception(std::current_exception());
      }
    }
  }

  void tick_once() {
    std::deque<OperatorCommand> cmds;
    {
      std::lock_guard lock(mutex_);
      cmds.swap(inbox_);
    }
    for (auto& c : cmds) sim_.submit(std::move(c));
    if (sim_.finished()) return;
    const std::string& line = sim_.step();
    if (log_) log_ << line << '\n' << std::flush;
    publish_locked_free();
    hub_.publish(stream_message());
  }

  void loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(sim_.scenario().dt * cfg_.time_scale));
    auto next = clock::now();
    while (running_) {
      serve_requests();
      const bool run = !paused_ && !sim_.finished();
      if (run && clock::now() >= next) {
        tick_once();
        next += period;
        if (clock::now() > next + 10 * period) next = clock::now();
        continue;
      }
      std::unique_lock lock(mutex_);
      auto ready = [this] { return !running_ || !requests_.empty(); };
      if (run) {
        wake_.wait_until(lock, next, ready);
      } else {
        wake_.wait_for(lock, std::chrono::milliseconds(50), [&] { return ready() || !paused_; });
        next = clock::now();
      }
    }
    serve_requests();
  }

  void publish_locked_free() {
    std::lock_guard lock(mutex_);
    latest_frame_ = sim_.latest_frame();
    published_tick_ = sim_.tick();
    ++seq_;
    server_time_ = std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
  }

  std::string stream_message() const { return state().dump(); }

  void install_routes() {
    auto json_reply = [](httplib::Response& res, const std::string& body, int status = 200) {
      res.status = status;
      res.set_content(body, "application/json");
      res.set_header("Access-Control-Allow-Origin", "*");
    };
    auto error_status = [](ErrorCode c) {
      switch (c) {
        case ErrorCode::NoData: return 409;
        case ErrorCode::UnknownRobot: return 404;
        case ErrorCode::InvalidArgument: return 404;
        default: return 400;
      }
    };
    http_.Get("/state", [this, json_reply](const httplib::Request&, httplib::Response& res) {
      json_reply(res, state().dump());
    });
    http_.Get("/scenario", [this, json_reply](const httplib::Request&, httplib::Response& res) {
      json_reply(res, scenario_json().dump());
    });
    http_.Get(R"(/artifact/([a-z]+))", [this, json_reply, error_status](const httplib::Request& req,
                                                                      httplib::Response& res) {
      try {
        const Artifact kind = artifact_from_string(req.matches[1]);
        const std::string body = artifact(kind);
        if (kind == Artifact::Log) {
          res.set_content(body, "application/x-ndjson");
        } else {
          json_reply(res, body);
        }
      } catch (const Error& e) {
        json_reply(res, nlohmann::json{{"error", to_string(e.code())}, {"message", e.what()}}.dump(),
                   error_status(e.code()));
      }
    });
    http_.Post("/command", [this, json_reply, error_status](const httplib::Request& req, httplib::Response& res) {
      try {
        nlohmann::json body;
        try {
          body = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::parse_error& e) {
          throw Error(ErrorCode::MalformedCommand, e.what());
        }
        json_reply(res, ack_to_json(handle_command(command_from_json(body))).dump());
      } catch (const Error& e) {
        CommandAck ack;
        ack.reason = e.what();
        nlohmann::json j = ack_to_json(ack);
        j["error"] = to_string(e.code());
        json_reply(res, j.dump(), error_status(e.code()));
      }
    });
  }

  ServiceConfig cfg_;
  Scenario scenario_;  // immutable copy for handler-side validation
  Simulator sim_;      // owned by the loop thread once started
  std::ofstream log_;
  httplib::Server http_;
  WebSocketHub hub_;
  int http_port_ = 0;
  std::atomic<bool> running_{false};
  std::atomic<bool> paused_{true};
  std::thread http_thread_;
  std::thread loop_thread_;
  mutable std::mutex mutex_;
  std::condition_variable wake_;
  std::deque<OperatorCommand> inbox_;
  std::deque<std::shared_ptr<Request>> requests_;
  nlohmann::ordered_json latest_frame_;
  long published_tick_ = 0;
  std::uint64_t seq_ = 0;
  double server_time_ = 0.0;
};

}  // namespace interocept
