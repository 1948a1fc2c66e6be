// interocept: plan paths, run the handover scenario, check run logs, serve
// the live operator console.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "interocept/control_service.hpp"
#include "interocept/planner.hpp"
#include "interocept/run_log.hpp"
#include "interocept/scenario.hpp"
#include "interocept/simulator.hpp"
#include "interocept/stacking.hpp"

namespace {

using namespace interocept;

CellCoord parse_cell(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw Error(ErrorCode::InvalidArgument, "cell must be col,row: " + s);
  try {
    return {std::stoi(s.substr(0, comma)), std::stoi(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, "cell must be col,row: " + s);
  }
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << text;
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shared-control motion planning: planner, scenario simulator and operator service"};
  app.require_subcommand(1);

  // plan
  auto* plan = app.add_subcommand("plan", "Plan a path over a map and hypergraph");
  std::string plan_scenario;
  std::string map_path;
  std::string hypergraph_path;
  std::string start_s;
  std::string goal_s;
  std::string state_s;
  std::string plan_out;
  bool use_dijkstra = false;
  plan->add_option("--map", map_path, "Map file");
  plan->add_option("--hypergraph", hypergraph_path, "Hypergraph file");
  plan->add_option("--scenario", plan_scenario, "Scenario file (instead of --map/--hypergraph)");
  plan->add_option("--start", start_s, "Start cell col,row")->required();
  plan->add_option("--goal", goal_s, "Goal cell col,row")->required();
  plan->add_option("--state", state_s, "Task state override availability,occupancy (e.g. Available,Clear)");
  plan->add_option("--out", plan_out, "Path JSON output (stdout when omitted)");
  plan->add_flag("--dijkstra", use_dijkstra, "Uniform-cost search instead of A*");

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run the handover scenario to completion");
  std::string sim_scenario;
  std::string inputs_path;
  std::string log_path;
  std::string episodic_path;
  long max_ticks = 0;
  simulate->add_option("--scenario", sim_scenario, "Scenario file")->required();
  simulate->add_option("--inputs", inputs_path, "Command trace (JSON array or a previous run log)");
  simulate->add_option("--log", log_path, "Run log output (JSON lines); '-' for stdout")->required();
  simulate->add_option("--episodic", episodic_path, "Episodic archive output (JSON lines)");
  simulate->add_option("--max-ticks", max_ticks, "Override the scenario's tick limit");

  // replay-log
  auto* replay_log = app.add_subcommand("replay-log", "Model-check a recorded run log");
  std::string replay_path;
  bool check_invariants = false;
  replay_log->add_option("log", replay_path, "Run log (JSON lines)")->required();
  replay_log->add_flag("--check-invariants", check_invariants, "Check safety, phase order, kinematics");

  // serve
  auto* serve = app.add_subcommand("serve", "Host the simulation for live operators");
  std::string serve_scenario;
  ServiceConfig svc;
  std::string model_path;
  serve->add_option("--scenario", serve_scenario, "Scenario file")->required();
  serve->add_option("--host", svc.host, "Bind host (INTEROCEPT_BIND=host:port overrides)");
  serve->add_option("--port", svc.port, "HTTP port; the frame stream uses port+1");
  serve->add_option("--time-scale", svc.time_scale, "Wall-clock seconds per simulated second")
      ->check(CLI::PositiveNumber);
  serve->add_option("--log", svc.log_path, "Run log output (JSON lines)");
  serve->add_option("--episodic", svc.episodic_path, "Episodic archive output (JSON lines)");
  serve->add_option("--model", model_path, "Velocity replay model for the embedding scatter");

  // stack
  auto* stack = app.add_subcommand("stack", "Plan pallet placement for a list of bins");
  std::string bins_path;
  stack->add_option("bins", bins_path, "JSON array of {id, weight_kg, orientation}")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan) {
      GridMap map;
      TaskHypergraph hg;
      if (!plan_scenario.empty()) {
        Scenario sc = load_scenario(plan_scenario);
        map = sc.map;
        hg = sc.hypergraph;
      } else {
        if (map_path.empty()) throw Error(ErrorCode::InvalidArgument, "--map or --scenario is required");
        map = grid_from_json(load_json_file(map_path));
        if (!hypergraph_path.empty()) hg = hypergraph_from_json(load_json_file(hypergraph_path));
      }
      TaskState state = hg.state();
      if (!state_s.empty()) {
        const auto comma = state_s.find(',');
        if (comma == std::string::npos) throw Error(ErrorCode::InvalidArgument, "--state is availability,occupancy");
        state.availability = availability_from_string(state_s.substr(0, comma));
        state.occupancy = occupancy_from_string(state_s.substr(comma + 1));
      }
      PlanOptions opts{state};
      const CellCoord start = parse_cell(start_s);
      const CellCoord goal = parse_cell(goal_s);
      const PlanResult res = use_dijkstra ? plan_dijkstra(map, hg, start, goal, opts)
                                          : plan_astar(map, hg, start, goal, opts);
      nlohmann::json out{{"found", res.found()}, {"expansions", res.expansions}, {"task_state", task_state_to_json(state)}};
      if (res.path) out["path"] = path_to_json(*res.path);
      write_text(plan_out, out.dump(2) + "\n");
      return res.found() ? 0 : 3;
    }

    if (*simulate) {
      Scenario sc = load_scenario(sim_scenario);
      if (max_ticks > 0) sc.max_ticks = max_ticks;
      Simulator sim(std::move(sc), episodic_path);
      if (!inputs_path.empty()) {
        for (auto& cmd : load_command_trace(detail::read_file(inputs_path))) sim.submit(std::move(cmd));
      }
      sim.run();
      write_text(log_path, sim.log_jsonl());
      std::cerr << "ticks " << sim.tick() << ", phase " << to_string(sim.phase()) << '\n';
      return sim.done() ? 0 : 2;
    }

    if (*replay_log) {
      const auto frames = parse_run_log(detail::read_file(replay_path));
      if (!check_invariants) {
        std::cout << nlohmann::json{{"frames", frames.size()}, {"final_phase", frames.back().at("phase")}}.dump(2) << '\n';
        return 0;
      }
      const InvariantReport rep = check_run_log(frames);
      std::cout << report_to_json(rep).dump(2) << '\n';
      return rep.ok() ? 0 : 1;
    }

    if (*serve) {
      if (const char* bind = std::getenv("INTEROCEPT_BIND")) apply_bind_override(svc, bind);
      if (!model_path.empty()) svc.model = velocity_model_from_json(load_json_file(model_path));
      ControlService service(load_scenario(serve_scenario), svc);
      service.start();
      std::cerr << "http://" << svc.host << ':' << service.http_port() << "  stream ws://" << svc.host << ':'
                << service.stream_port() << "/stream  (paused; POST {\"kind\":\"resume\"} to /command)\n";
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      service.stop();
      return 0;
    }

    if (*stack) {
      const auto doc = load_json_file(bins_path);
      std::vector<BinSpec> bins;
      for (const auto& b : doc) {
        const std::string o = b.value("orientation", std::string("UpsideDown"));
        if (o != "UpsideDown" && o != "RightSideUp") throw Error(ErrorCode::ParseError, "orientation '" + o + "'");
        bins.push_back({b.at("id").get<std::string>(), b.at("weight_kg").get<double>(),
                        o == "RightSideUp" ? BinOrientation::RightSideUp : BinOrientation::UpsideDown});
      }
      const StackPlan sp = plan_stack(bins);
      nlohmann::json placements = nlohmann::json::array();
      for (const auto& p : sp.placements) {
        placements.push_back({{"bin_id", p.bin_id},
                              {"side", p.side == PalletSide::Left ? "Left" : "Right"},
                              {"flip_applied", p.flip_applied},
                              {"order", p.order}});
      }
      std::cout << nlohmann::json{{"placements", placements}, {"balance_kg", sp.balance_kg}}.dump(2) << '\n';
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
