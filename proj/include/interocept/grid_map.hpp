#pragma once

// Occupancy/terrain lattice viewed as an 8-connected graph.
//
// Coordinates are (col, row). World position of a cell center is
// ((col + 0.5) * cell_size, (row + 0.5) * cell_size); "north" is row - 1.

#include <array>
#include <cmath>
#include <compare>
#include <cstdlib>
#include <initializer_list>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "interocept/error.hpp"

namespace interocept {

inline constexpr double kSqrt2 = 1.41421356237309504880;

struct CellCoord {
  int col = 0;
  int row = 0;

  auto operator<=>(const CellCoord&) const = default;
};

inline std::string to_string(CellCoord c) {
  return "(" + std::to_string(c.col) + "," + std::to_string(c.row) + ")";
}

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class CellOccupancy { Free, Obstacle };

struct Cell {
  CellOccupancy occupancy = CellOccupancy::Free;
  std::string terrain_label;
  double terrain_multiplier = 1.0;
};

struct TerrainPatch {
  CellCoord cell;
  std::string label;
  double multiplier = 1.0;
};

struct Neighbor {
  CellCoord cell;
  double base_cost = 1.0;
};

class GridMap {
 public:
  GridMap() : GridMap(1, 1, 1.0) {}
  GridMap(int width, int height, double cell_size)
      : width_(width), height_(height), cell_size_(cell_size) {
    if (width < 1 || height < 1) {
      throw Error(ErrorCode::InvalidArgument, "grid dimensions must be >= 1");
    }
    if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
      throw Error(ErrorCode::InvalidArgument, "cell_size must be > 0");
    }
    cells_.resize(static_cast<std::size_t>(width) * static_cast<std::size_t>(height));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  double cell_size() const noexcept { return cell_size_; }
  std::size_t size() const noexcept { return cells_.size(); }

  bool in_bounds(CellCoord c) const noexcept {
    return c.col >= 0 && c.row >= 0 && c.col < width_ && c.row < height_;
  }

  std::size_t index(CellCoord c) const noexcept {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(c.col);
  }

  CellCoord coord(std::size_t index) const noexcept {
    return {static_cast<int>(index % static_cast<std::size_t>(width_)),
            static_cast<int>(index / static_cast<std::size_t>(width_))};
  }

  const Cell& at(CellCoord c) const {
    require_in_bounds(c);
    return cells_[index(c)];
  }

  Cell& at(CellCoord c) {
    require_in_bounds(c);
    return cells_[index(c)];
  }

  bool is_free(CellCoord c) const noexcept {
    return in_bounds(c) && cells_[index(c)].occupancy == CellOccupancy::Free;
  }

  Point2 center(CellCoord c) const noexcept {
    return {(c.col + 0.5) * cell_size_, (c.row + 0.5) * cell_size_};
  }

  /// Cell containing a world point by the floor(x / cell_size) convention.
  std::optional<CellCoord> cell_at(double x, double y) const noexcept {
    if (!std::isfinite(x) || !std::isfinite(y)) return std::nullopt;
    const CellCoord c{static_cast<int>(std::floor(x / cell_size_)),
                      static_cast<int>(std::floor(y / cell_size_))};
    if (!in_bounds(c)) return std::nullopt;
    return c;
  }

  void require_in_bounds(CellCoord c) const {
    if (!in_bounds(c)) throw Error(ErrorCode::OutOfBounds, to_string(c));
  }

 private:
  int width_;
  int height_;
  double cell_size_;
  std::vector<Cell> cells_;
};

inline GridMap build_grid(int width, int height, double cell_size,
                          const std::vector<CellCoord>& obstacles,
                          const std::vector<TerrainPatch>& terrain_patches) {
  GridMap grid(width, height, cell_size);
  for (const auto& c : obstacles) {
    grid.at(c).occupancy = CellOccupancy::Obstacle;
  }
  for (const auto& patch : terrain_patches) {
    grid.require_in_bounds(patch.cell);
    if (!(patch.multiplier >= 1.0) || !std::isfinite(patch.multiplier)) {
      throw Error(ErrorCode::InvalidMultiplier,
                  to_string(patch.cell) + " multiplier " + std::to_string(patch.multiplier));
    }
    Cell& cell = grid.at(patch.cell);
    cell.terrain_label = patch.label;
    cell.terrain_multiplier = patch.multiplier;
  }
  return grid;
}

namespace detail {

struct Move {
  int dcol;
  int drow;
};

// N, NE, E, SE, S, SW, W, NW
inline constexpr std::array<Move, 8> kMoves{{
    {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}}};

}  // namespace detail

/// 8-connected free neighbors in N, NE, E, SE, S, SW, W, NW order. A diagonal
/// is dropped when either adjacent cardinal cell is blocked.
inline std::vector<Neighbor> neighbors(const GridMap& grid, CellCoord cell) {
  grid.require_in_bounds(cell);
  if (!grid.is_free(cell)) throw Error(ErrorCode::CellIsObstacle, to_string(cell));

  std::vector<Neighbor> out;
  out.reserve(8);
  for (const auto& m : detail::kMoves) {
    const CellCoord next{cell.col + m.dcol, cell.row + m.drow};
    if (!grid.is_free(next)) continue;
    const bool diagonal = m.dcol != 0 && m.drow != 0;
    if (diagonal) {
      if (!grid.is_free({cell.col + m.dcol, cell.row}) ||
          !grid.is_free({cell.col, cell.row + m.drow})) {
        continue;
      }
    }
    out.push_back({next, diagonal ? kSqrt2 : 1.0});
  }
  return out;
}

/// Base geometric cost of a single move, or nullopt if the cells are not
/// 8-adjacent (identical cells are not adjacent).
inline std::optional<double> step_base_cost(CellCoord a, CellCoord b) noexcept {
  const int dc = std::abs(a.col - b.col);
  const int dr = std::abs(a.row - b.row);
  if (dc > 1 || dr > 1 || (dc == 0 && dr == 0)) return std::nullopt;
  return (dc == 1 && dr == 1) ? kSqrt2 : 1.0;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> known,
                                const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::ParseError, where + ": expected object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (item.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw Error(ErrorCode::ParseError, where + ": unknown key '" + item.key() + "'");
  }
}

inline CellCoord cell_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
    throw Error(ErrorCode::ParseError, "cell must be [col,row], got " + j.dump());
  }
  return {j[0].get<int>(), j[1].get<int>()};
}

inline nlohmann::json cell_to_json(CellCoord c) { return nlohmann::json::array({c.col, c.row}); }

}  // namespace detail

inline GridMap grid_from_json(const nlohmann::json& j) {
  detail::reject_unknown_keys(j, {"width", "height", "cell_size", "obstacles", "terrain"}, "map");
  try {
    std::vector<CellCoord> obstacles;
    for (const auto& o : j.value("obstacles", nlohmann::json::array())) {
      obstacles.push_back(detail::cell_from_json(o));
    }
    std::vector<TerrainPatch> patches;
    for (const auto& t : j.value("terrain", nlohmann::json::array())) {
      detail::reject_unknown_keys(t, {"cell", "label", "multiplier"}, "map.terrain");
      patches.push_back({detail::cell_from_json(t.at("cell")), t.value("label", std::string{}),
                         t.at("multiplier").get<double>()});
    }
    return build_grid(j.at("width").get<int>(), j.at("height").get<int>(),
                      j.at("cell_size").get<double>(), obstacles, patches);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("map: ") + e.what());
  }
}

inline nlohmann::json grid_to_json(const GridMap& grid) {
  nlohmann::json obstacles = nlohmann::json::array();
  nlohmann::json terrain = nlohmann::json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const CellCoord c = grid.coord(i);
    const Cell& cell = grid.at(c);
    if (cell.occupancy == CellOccupancy::Obstacle) obstacles.push_back(detail::cell_to_json(c));
    if (!cell.terrain_label.empty() || cell.terrain_multiplier != 1.0) {
      terrain.push_back({{"cell", detail::cell_to_json(c)},
                         {"label", cell.terrain_label},
                         {"multiplier", cell.terrain_multiplier}});
    }
  }
  return {{"width", grid.width()},
          {"height", grid.height()},
          {"cell_size", grid.cell_size()},
          {"obstacles", obstacles},
          {"terrain", terrain}};
}

}  // namespace interocept
