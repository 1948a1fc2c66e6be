#pragma once

// Arc-length tracking by integrating sampled velocity curves, positions along
// cell-center polylines, pairwise proximity alerts and visit heatmaps.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include <json.hpp>

#include "interocept/error.hpp"
#include "interocept/grid_map.hpp"
#include "interocept/planner.hpp"

namespace interocept {

struct VelocityProfile {
  double sample_rate_hz = 20.0;
  std::vector<double> samples;  // m/s, uniformly spaced

  double duration() const noexcept {
    return samples.empty() ? 0.0 : static_cast<double>(samples.size() - 1) / sample_rate_hz;
  }

  /// Linear interpolation between samples; t is clamped to [0, duration].
  double at(double t) const {
    if (samples.empty()) throw Error(ErrorCode::EmptyPath, "profile has no samples");
    const double pos = std::clamp(t * sample_rate_hz, 0.0, static_cast<double>(samples.size() - 1));
    const auto i = static_cast<std::size_t>(std::floor(pos));
    if (i + 1 >= samples.size()) return samples.back();
    const double frac = pos - static_cast<double>(i);
    return samples[i] + (samples[i + 1] - samples[i]) * frac;
  }
};

struct Trapezoid {};

struct MonteCarlo {
  std::size_t n_samples = 10000;
  std::uint64_t seed = 0;
};

using IntegrationMethod = std::variant<Trapezoid, MonteCarlo>;

namespace detail {

// Exact integral of the piecewise-linear interpolant over [t0, t1].
inline double trapezoid_integral(const VelocityProfile& p, double t0, double t1) {
  const double rate = p.sample_rate_hz;
  const double last = static_cast<double>(p.samples.size() - 1);
  const double u0 = std::min(t0 * rate, last);
  const double u1 = std::min(t1 * rate, last);
  if (u1 <= u0) return 0.0;
  const auto k0 = static_cast<std::size_t>(std::floor(u0));
  const auto k1 = static_cast<std::size_t>(std::floor(u1));
  auto value = [&](double u) { return p.at(u / rate); };

  // accumulate in sample units; one division by the rate at the end
  if (k0 == k1) return 0.5 * (value(u0) + value(u1)) * (u1 - u0) / rate;

  double total = 0.5 * (value(u0) + p.samples[k0 + 1]) * (static_cast<double>(k0 + 1) - u0);
  for (std::size_t k = k0 + 1; k < k1; ++k) total += 0.5 * (p.samples[k] + p.samples[k + 1]);
  total += 0.5 * (p.samples[k1] + value(u1)) * (u1 - static_cast<double>(k1));
  return total / rate;
}

}  // namespace detail

/// Distance travelled over [t0, t1] seconds.
inline double arc_length(const VelocityProfile& profile, double t0, double t1,
                         const IntegrationMethod& method = Trapezoid{}) {
  if (profile.samples.empty() || !(profile.sample_rate_hz > 0.0)) {
    throw Error(ErrorCode::InvalidRange, "profile must have samples and a positive rate");
  }
  const double duration = profile.duration();
  // Range checks tolerate the rounding of t = k / rate at the final sample.
  const double eps = 1e-12 * std::max(1.0, duration);
  if (!(t0 >= 0.0) || !(t1 >= t0) || t1 > duration + eps) {
    throw Error(ErrorCode::InvalidRange, "[" + std::to_string(t0) + ", " + std::to_string(t1) +
                                             "] outside [0, " + std::to_string(duration) + "]");
  }
  t1 = std::min(t1, duration);
  if (const auto* mc = std::get_if<MonteCarlo>(&method)) {
    if (mc->n_samples == 0) throw Error(ErrorCode::InvalidArgument, "n_samples must be >= 1");
    std::mt19937_64 rng(mc->seed);
    std::uniform_real_distribution<double> uniform(t0, t1);
    double sum = 0.0;
    for (std::size_t i = 0; i < mc->n_samples; ++i) sum += profile.at(uniform(rng));
    return sum / static_cast<double>(mc->n_samples) * (t1 - t0);
  }
  return detail::trapezoid_integral(profile, t0, t1);
}

/// Point at arc length s along the polyline of cell centers; clamps past the end.
inline Point2 position_along_path(const Path& path, double cell_size, double s) {
  if (path.cells.empty()) throw Error(ErrorCode::EmptyPath, "position on empty path");
  if (!(s >= 0.0)) throw Error(ErrorCode::InvalidRange, "s must be >= 0");
  auto center = [cell_size](CellCoord c) {
    return Point2{(c.col + 0.5) * cell_size, (c.row + 0.5) * cell_size};
  };
  Point2 prev = center(path.cells.front());
  double remaining = s;
  for (std::size_t i = 1; i < path.cells.size(); ++i) {
    const Point2 next = center(path.cells[i]);
    const double seg = std::hypot(next.x - prev.x, next.y - prev.y);
    if (remaining <= seg && seg > 0.0) {
      const double f = remaining / seg;
      return {prev.x + (next.x - prev.x) * f, prev.y + (next.y - prev.y) * f};
    }
    remaining -= seg;
    prev = next;
  }
  return prev;
}

/// Euclidean distance from a point to the polyline of cell centers.
inline double distance_to_path(const Path& path, double cell_size, Point2 p) {
  if (path.cells.empty()) throw Error(ErrorCode::EmptyPath, "distance to empty path");
  auto center = [cell_size](CellCoord c) {
    return Point2{(c.col + 0.5) * cell_size, (c.row + 0.5) * cell_size};
  };
  Point2 a = center(path.cells.front());
  double best = std::hypot(p.x - a.x, p.y - a.y);
  for (std::size_t i = 1; i < path.cells.size(); ++i) {
    const Point2 b = center(path.cells[i]);
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double f = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    f = std::clamp(f, 0.0, 1.0);
    best = std::min(best, std::hypot(p.x - (a.x + f * dx), p.y - (a.y + f * dy)));
    a = b;
  }
  return best;
}

struct RobotPosition {
  std::string id;
  double x = 0.0;
  double y = 0.0;
};

struct ProximityAlert {
  long tick = 0;
  std::string robot_a;
  std::string robot_b;
  double distance_m = 0.0;
  double threshold_m = 0.0;

  bool operator==(const ProximityAlert&) const = default;
};

/// One alert per unordered pair strictly closer than the threshold, sorted by (a, b).
inline std::vector<ProximityAlert> check_proximity(std::span<const RobotPosition> positions,
                                                   double threshold_m, long tick = 0) {
  if (!(threshold_m > 0.0)) throw Error(ErrorCode::InvalidArgument, "threshold must be > 0");
  std::set<std::string> seen;
  for (const auto& p : positions) {
    if (!seen.insert(p.id).second) throw Error(ErrorCode::DuplicateId, p.id);
  }
  std::vector<ProximityAlert> alerts;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      const double d = std::hypot(positions[i].x - positions[j].x, positions[i].y - positions[j].y);
      if (d < threshold_m) {
        const bool ordered = positions[i].id < positions[j].id;
        alerts.push_back({tick, ordered ? positions[i].id : positions[j].id,
                          ordered ? positions[j].id : positions[i].id, d, threshold_m});
      }
    }
  }
  std::sort(alerts.begin(), alerts.end(), [](const ProximityAlert& a, const ProximityAlert& b) {
    return std::tie(a.robot_a, a.robot_b) < std::tie(b.robot_a, b.robot_b);
  });
  return alerts;
}

struct PoseSample {
  long tick = 0;
  std::string id;
  double x = 0.0;
  double y = 0.0;
};

struct Heatmap {
  int width = 0;
  int height = 0;
  std::vector<long> counts;  // row-major [row][col]
  long discarded = 0;

  long at(CellCoord c) const { return counts.at(static_cast<std::size_t>(c.row * width + c.col)); }
};

inline Heatmap visit_heatmap(std::span<const PoseSample> pose_log, const GridMap& grid) {
  Heatmap map{grid.width(), grid.height(), std::vector<long>(grid.size(), 0), 0};
  for (const auto& pose : pose_log) {
    if (const auto cell = grid.cell_at(pose.x, pose.y)) {
      ++map.counts[grid.index(*cell)];
    } else {
      ++map.discarded;
    }
  }
  return map;
}

/// 2D array [row][col] of visit counts.
inline nlohmann::json heatmap_to_json(const Heatmap& map) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < map.height; ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < map.width; ++c) row.push_back(map.counts[static_cast<std::size_t>(r * map.width + c)]);
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json alert_to_json(const ProximityAlert& a) {
  return {{"robot_a", a.robot_a},
          {"robot_b", a.robot_b},
          {"distance_m", a.distance_m},
          {"threshold_m", a.threshold_m}};
}

}  // namespace interocept
