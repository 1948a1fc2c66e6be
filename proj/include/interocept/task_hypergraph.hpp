#pragma once

// Task-space overlay on the grid: hyperedges of any arity that carry either a
// terrain cost factor or a task precondition evaluated against a global
// (availability, occupancy) state.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "interocept/error.hpp"
#include "interocept/grid_map.hpp"

namespace interocept {

inline constexpr double kInfiniteCost = std::numeric_limits<double>::infinity();

enum class Availability { Available, Unavailable };
enum class PathwayOccupancy { Clear, Occupied };
enum class AvailabilityRequirement { Available, Unavailable, Any };
enum class OccupancyRequirement { Clear, Occupied, Any };

struct TaskState {
  Availability availability = Availability::Available;
  PathwayOccupancy occupancy = PathwayOccupancy::Clear;

  bool operator==(const TaskState&) const = default;
};

struct TerrainFeature {
  std::string label;
  double multiplier = 1.0;
};

struct TaskPrecondition {
  AvailabilityRequirement required_availability = AvailabilityRequirement::Any;
  OccupancyRequirement required_occupancy = OccupancyRequirement::Any;
  double violation_penalty = kInfiniteCost;  // > 0; infinity marks the cell non-steppable
};

using EdgeAttribute = std::variant<TerrainFeature, TaskPrecondition>;

struct TaskNodeName {
  std::string name;
};

struct HyperVertex {
  int id = 0;
  std::variant<CellCoord, TaskNodeName> kind;

  const CellCoord* spatial() const noexcept { return std::get_if<CellCoord>(&kind); }
};

struct HyperEdge {
  int id = 0;
  std::vector<int> members;  // sorted, unique
  EdgeAttribute attribute;
};

class TaskHypergraph {
 public:
  const std::map<int, HyperVertex>& vertices() const noexcept { return vertices_; }
  const std::map<int, HyperEdge>& edges() const noexcept { return edges_; }
  const TaskState& state() const noexcept { return state_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  int add_vertex(HyperVertex v) {
    if (vertices_.count(v.id) != 0) {
      throw Error(ErrorCode::DuplicateVertex, "vertex id " + std::to_string(v.id));
    }
    if (const CellCoord* c = v.spatial()) {
      if (spatial_vertex_.count(*c) != 0) {
        throw Error(ErrorCode::DuplicateVertex, "cell " + to_string(*c) + " already has a vertex");
      }
      spatial_vertex_[*c] = v.id;
    }
    next_vertex_id_ = std::max(next_vertex_id_, v.id + 1);
    const int id = v.id;
    vertices_.emplace(id, std::move(v));
    return id;
  }

  int add_spatial_vertex(CellCoord cell) { return add_vertex({next_vertex_id_, cell}); }

  int add_task_vertex(std::string name) {
    return add_vertex({next_vertex_id_, TaskNodeName{std::move(name)}});
  }

  /// Vertex id for a cell, creating the spatial vertex on first use.
  int ensure_spatial_vertex(CellCoord cell) {
    if (auto it = spatial_vertex_.find(cell); it != spatial_vertex_.end()) return it->second;
    return add_spatial_vertex(cell);
  }

  std::optional<int> vertex_for_cell(CellCoord cell) const {
    if (auto it = spatial_vertex_.find(cell); it != spatial_vertex_.end()) return it->second;
    return std::nullopt;
  }

  int add_hyperedge(std::vector<int> members, EdgeAttribute attribute) {
    return add_hyperedge_with_id(next_edge_id_, std::move(members), std::move(attribute));
  }

  int add_hyperedge_with_id(int id, std::vector<int> members, EdgeAttribute attribute) {
    if (members.empty()) throw Error(ErrorCode::EmptyMembers, "hyperedge needs >= 1 member");
    if (edges_.count(id) != 0) throw Error(ErrorCode::DuplicateId, "edge id " + std::to_string(id));
    for (int m : members) {
      if (vertices_.count(m) == 0) throw Error(ErrorCode::UnknownVertex, std::to_string(m));
    }
    validate_attribute(attribute);
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());

    for (int m : members) {
      if (const CellCoord* c = vertices_.at(m).spatial()) cell_index_[*c].push_back(id);
    }
    next_edge_id_ = std::max(next_edge_id_, id + 1);
    edges_.emplace(id, HyperEdge{id, std::move(members), std::move(attribute)});
    return id;
  }

  /// Updates only the provided fields and returns the full new state.
  TaskState set_task_state(std::optional<Availability> availability,
                           std::optional<PathwayOccupancy> occupancy) {
    if (availability) state_.availability = *availability;
    if (occupancy) state_.occupancy = *occupancy;
    return state_;
  }

  /// Edge ids covering a cell, in insertion order.
  const std::vector<int>& edges_covering(CellCoord cell) const {
    static const std::vector<int> kNone;
    auto it = cell_index_.find(cell);
    return it == cell_index_.end() ? kNone : it->second;
  }

  const std::map<CellCoord, std::vector<int>>& cell_index() const noexcept { return cell_index_; }

 private:
  static void validate_attribute(const EdgeAttribute& attribute) {
    if (const auto* t = std::get_if<TerrainFeature>(&attribute)) {
      if (!(t->multiplier >= 1.0) || !std::isfinite(t->multiplier)) {
        throw Error(ErrorCode::InvalidMultiplier, "terrain edge multiplier " +
                                                      std::to_string(t->multiplier));
      }
    } else {
      const auto& p = std::get<TaskPrecondition>(attribute);
      if (!(p.violation_penalty > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "violation_penalty must be > 0");
      }
    }
  }

  std::map<int, HyperVertex> vertices_;
  std::map<int, HyperEdge> edges_;
  std::map<CellCoord, int> spatial_vertex_;
  std::map<CellCoord, std::vector<int>> cell_index_;
  TaskState state_;
  int next_vertex_id_ = 0;
  int next_edge_id_ = 0;
};

inline bool precondition_holds(const HyperEdge& edge, const TaskState& state) {
  const auto* p = std::get_if<TaskPrecondition>(&edge.attribute);
  if (p == nullptr) {
    throw Error(ErrorCode::NotAPrecondition, "edge " + std::to_string(edge.id) + " is terrain");
  }
  const bool avail_ok =
      p->required_availability == AvailabilityRequirement::Any ||
      (p->required_availability == AvailabilityRequirement::Available) ==
          (state.availability == Availability::Available);
  const bool occ_ok = p->required_occupancy == OccupancyRequirement::Any ||
                      (p->required_occupancy == OccupancyRequirement::Clear) ==
                          (state.occupancy == PathwayOccupancy::Clear);
  return avail_ok && occ_ok;
}

/// Cost of moving into `dest`, evaluated against an explicit task state:
/// base * cell multiplier * product of covering terrain multipliers, plus the
/// penalty of every covering precondition that fails.
inline double effective_move_cost(const TaskHypergraph& hg, const GridMap& grid, CellCoord dest,
                                  double base_cost, const TaskState& state) {
  const Cell& cell = grid.at(dest);
  if (cell.occupancy == CellOccupancy::Obstacle) {
    throw Error(ErrorCode::CellIsObstacle, to_string(dest));
  }
  double cost = base_cost * cell.terrain_multiplier;
  const auto& covering = hg.edges_covering(dest);
  for (int id : covering) {
    if (const auto* t = std::get_if<TerrainFeature>(&hg.edges().at(id).attribute)) {
      cost *= t->multiplier;
    }
  }
  for (int id : covering) {
    const HyperEdge& edge = hg.edges().at(id);
    if (const auto* p = std::get_if<TaskPrecondition>(&edge.attribute)) {
      if (!precondition_holds(edge, state)) cost += p->violation_penalty;
    }
  }
  return cost;
}

inline double effective_move_cost(const TaskHypergraph& hg, const GridMap& grid, CellCoord dest,
                                  double base_cost) {
  return effective_move_cost(hg, grid, dest, base_cost, hg.state());
}

// ---------------------------------------------------------------------------
// Enum names shared by every JSON surface.

inline const char* to_string(Availability a) {
  return a == Availability::Available ? "Available" : "Unavailable";
}
inline const char* to_string(PathwayOccupancy o) {
  return o == PathwayOccupancy::Clear ? "Clear" : "Occupied";
}
inline const char* to_string(AvailabilityRequirement a) {
  switch (a) {
    case AvailabilityRequirement::Available: return "Available";
    case AvailabilityRequirement::Unavailable: return "Unavailable";
    case AvailabilityRequirement::Any: return "Any";
  }
  return "Any";
}
inline const char* to_string(OccupancyRequirement o) {
  switch (o) {
    case OccupancyRequirement::Clear: return "Clear";
    case OccupancyRequirement::Occupied: return "Occupied";
    case OccupancyRequirement::Any: return "Any";
  }
  return "Any";
}

inline Availability availability_from_string(const std::string& s) {
  if (s == "Available") return Availability::Available;
  if (s == "Unavailable") return Availability::Unavailable;
  throw Error(ErrorCode::ParseError, "availability '" + s + "'");
}
inline PathwayOccupancy occupancy_from_string(const std::string& s) {
  if (s == "Clear") return PathwayOccupancy::Clear;
  if (s == "Occupied") return PathwayOccupancy::Occupied;
  throw Error(ErrorCode::ParseError, "occupancy '" + s + "'");
}
inline AvailabilityRequirement availability_req_from_string(const std::string& s) {
  if (s == "Any") return AvailabilityRequirement::Any;
  return availability_from_string(s) == Availability::Available
             ? AvailabilityRequirement::Available
             : AvailabilityRequirement::Unavailable;
}
inline OccupancyRequirement occupancy_req_from_string(const std::string& s) {
  if (s == "Any") return OccupancyRequirement::Any;
  return occupancy_from_string(s) == PathwayOccupancy::Clear ? OccupancyRequirement::Clear
                                                             : OccupancyRequirement::Occupied;
}

inline nlohmann::json task_state_to_json(const TaskState& s) {
  return {{"availability", to_string(s.availability)}, {"occupancy", to_string(s.occupancy)}};
}

inline TaskState task_state_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(j, {"availability", "occupancy"}, "task_state");
  TaskState s;
  if (j.contains("availability")) s.availability = availability_from_string(j.at("availability"));
  if (j.contains("occupancy")) s.occupancy = occupancy_from_string(j.at("occupancy"));
  return s;
}

// Penalty is a number, or the string "inf" for a hard block.
inline nlohmann::json attribute_to_json(const EdgeAttribute& attribute) {
  if (const auto* t = std::get_if<TerrainFeature>(&attribute)) {
    return {{"type", "terrain"}, {"label", t->label}, {"multiplier", t->multiplier}};
  }
  const auto& p = std::get<TaskPrecondition>(attribute);
  nlohmann::json penalty = std::isinf(p.violation_penalty) ? nlohmann::json("inf")
                                                           : nlohmann::json(p.violation_penalty);
  return {{"type", "precondition"},
          {"required_availability", to_string(p.required_availability)},
          {"required_occupancy", to_string(p.required_occupancy)},
          {"violation_penalty", penalty}};
}

inline EdgeAttribute attribute_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "terrain") {
    detail::reject_unknown_keys(j, {"type", "label", "multiplier"}, "edge.attribute");
    return TerrainFeature{j.value("label", std::string{}), j.at("multiplier").get<double>()};
  }
  if (type == "precondition") {
    detail::reject_unknown_keys(
        j, {"type", "required_availability", "required_occupancy", "violation_penalty"},
        "edge.attribute");
    TaskPrecondition p;
    p.required_availability =
        availability_req_from_string(j.value("required_availability", std::string("Any")));
    p.required_occupancy =
        occupancy_req_from_string(j.value("required_occupancy", std::string("Any")));
    const auto& pen = j.at("violation_penalty");
    if (pen.is_string()) {
      const auto s = pen.get<std::string>();
      if (s != "inf" && s != "Infinite") throw Error(ErrorCode::ParseError, "penalty '" + s + "'");
      p.violation_penalty = kInfiniteCost;
    } else {
      p.violation_penalty = pen.get<double>();
    }
    return p;
  }
  throw Error(ErrorCode::ParseError, "attribute type '" + type + "'");
}

inline TaskHypergraph hypergraph_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(j, {"vertices", "edges", "initial_state"}, "hypergraph");
  TaskHypergraph hg;
  try {
    for (const auto& v : j.value("vertices", nlohmann::json::array())) {
      detail::reject_unknown_keys(v, {"id", "cell", "task_name"}, "hypergraph.vertices");
      const int id = v.at("id").get<int>();
      if (v.contains("cell") == v.contains("task_name")) {
        throw Error(ErrorCode::ParseError, "vertex " + std::to_string(id) +
                                               " needs exactly one of cell/task_name");
      }
      if (v.contains("cell")) {
        hg.add_vertex({id, detail::cell_from_json(v.at("cell"))});
      } else {
        hg.add_vertex({id, TaskNodeName{v.at("task_name").get<std::string>()}});
      }
    }
    for (const auto& e : j.value("edges", nlohmann::json::array())) {
      detail::reject_unknown_keys(e, {"id", "members", "attribute"}, "hypergraph.edges");
      hg.add_hyperedge_with_id(e.at("id").get<int>(), e.at("members").get<std::vector<int>>(),
                               attribute_from_json(e.at("attribute")));
    }
    if (j.contains("initial_state")) {
      const TaskState s = task_state_from_json(j.at("initial_state"));
      hg.set_task_state(s.availability, s.occupancy);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::ParseError, std::string("hypergraph: ") + ex.what());
  }
  return hg;
}

/// Serializes structure plus the current state (as initial_state).
inline nlohmann::json hypergraph_to_json(const TaskHypergraph& hg) {
  nlohmann::json vertices = nlohmann::json::array();
  for (const auto& [id, v] : hg.vertices()) {
    if (const CellCoord* c = v.spatial()) {
      vertices.push_back({{"id", id}, {"cell", detail::cell_to_json(*c)}});
    } else {
      vertices.push_back({{"id", id}, {"task_name", std::get<TaskNodeName>(v.kind).name}});
    }
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [id, e] : hg.edges()) {
    edges.push_back({{"id", id}, {"members", e.members}, {"attribute", attribute_to_json(e.attribute)}});
  }
  return {{"vertices", vertices}, {"edges", edges}, {"initial_state", task_state_to_json(hg.state())}};
}

}  // namespace interocept
