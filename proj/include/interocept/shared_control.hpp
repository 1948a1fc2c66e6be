#pragma once

// Shared control: the human channel is the autonomous command shifted by the
// tick's summed increments; the executed command is the average of the two
// channels. The gap between what autonomy wanted and what was executed is
// logged as dissonance.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "interocept/error.hpp"

namespace interocept {

struct CommandLimits {
  double v_max = 1.0;   // m/s
  double w_max = 2.0;   // rad/s
  double dv_max = 0.5;  // per-event clamp, m/s
  double dw_max = 1.0;  // per-event clamp, rad/s
};

struct AutonomousCommand {
  double v = 0.0;
  double w = 0.0;
  long tick = 0;
};

enum class InputSource { Keyboard, Gamepad, Api };

struct HumanIncrement {
  double dv = 0.0;
  double dw = 0.0;
  long tick = 0;
  InputSource source = InputSource::Api;
};

struct FusedCommand {
  double v = 0.0;
  double w = 0.0;
  long tick = 0;

  bool operator==(const FusedCommand&) const = default;
};

struct DissonanceRecord {
  long tick = 0;
  double intensity = 0.0;   // m/s-equivalent
  double dissonance = 0.0;  // [0, 1]
  double station_m = 0.0;
};

/// Clamps a single increment to the per-event maxima. Returns true if clamped.
inline bool clamp_increment(HumanIncrement& inc, const CommandLimits& limits) {
  const double dv = std::clamp(inc.dv, -limits.dv_max, limits.dv_max);
  const double dw = std::clamp(inc.dw, -limits.dw_max, limits.dw_max);
  const bool clamped = dv != inc.dv || dw != inc.dw;
  inc.dv = dv;
  inc.dw = dw;
  return clamped;
}

inline FusedCommand fuse(const AutonomousCommand& autonomous,
                         std::span<const HumanIncrement> increments, const CommandLimits& limits) {
  for (const auto& inc : increments) {
    if (inc.tick != autonomous.tick) {
      throw Error(ErrorCode::TickMismatch, "increment tick " + std::to_string(inc.tick) +
                                               " != " + std::to_string(autonomous.tick));
    }
  }
  if (increments.empty()) return {autonomous.v, autonomous.w, autonomous.tick};

  double sum_dv = 0.0;
  double sum_dw = 0.0;
  for (const auto& inc : increments) {
    sum_dv += inc.dv;
    sum_dw += inc.dw;
  }
  // clamp human channel, average, clamp again
  const double human_v = std::clamp(autonomous.v + sum_dv, 0.0, limits.v_max);
  const double human_w = std::clamp(autonomous.w + sum_dw, -limits.w_max, limits.w_max);
  return {std::clamp((autonomous.v + human_v) / 2.0, 0.0, limits.v_max),
          std::clamp((autonomous.w + human_w) / 2.0, -limits.w_max, limits.w_max), autonomous.tick};
}

/// Angular quantities are brought to m/s by the v_max / w_max ratio.
inline DissonanceRecord record_dissonance(const AutonomousCommand& autonomous,
                                          const FusedCommand& fused,
                                          std::span<const HumanIncrement> increments,
                                          double station_m, const CommandLimits& limits) {
  if (!(limits.v_max > 0.0) || !(limits.w_max > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "v_max and w_max must be > 0");
  }
  const double angular_scale = limits.v_max / limits.w_max;
  DissonanceRecord rec;
  rec.tick = autonomous.tick;
  rec.station_m = station_m;
  for (const auto& inc : increments) {
    rec.intensity += std::abs(inc.dv) + std::abs(inc.dw) * angular_scale;
  }
  if (increments.empty()) return rec;
  const double deviation =
      std::abs(fused.v - autonomous.v) + angular_scale * std::abs(fused.w - autonomous.w);
  rec.dissonance = std::min(1.0, deviation / limits.v_max);
  return rec;
}

struct DissonanceField {
  int time_bins = 1;
  int station_bins = 1;
  std::vector<double> values;  // row-major [time][station]

  double at(int t, int s) const { return values.at(static_cast<std::size_t>(t * station_bins + s)); }
};

/// Axis ranges for bucketing; when omitted they span the records
/// (ticks [0, max_tick], stations [0, max_station]).
struct FieldRange {
  long max_tick = 0;
  double max_station_m = 0.0;
};

inline DissonanceField dissonance_field(std::span<const DissonanceRecord> records, int time_bins,
                                        int station_bins, std::optional<FieldRange> range = {}) {
  if (time_bins < 1 || station_bins < 1) throw Error(ErrorCode::InvalidArgument, "bins must be >= 1");
  FieldRange r;
  if (range) {
    r = *range;
  } else {
    for (const auto& rec : records) {
      r.max_tick = std::max(r.max_tick, rec.tick);
      r.max_station_m = std::max(r.max_station_m, rec.station_m);
    }
  }
  const auto cells = static_cast<std::size_t>(time_bins) * static_cast<std::size_t>(station_bins);
  std::vector<double> sum(cells, 0.0);
  std::vector<int> count(cells, 0);
  for (const auto& rec : records) {
    const double t_frac = static_cast<double>(std::max(0L, rec.tick)) / static_cast<double>(r.max_tick + 1);
    const int tb = std::clamp(static_cast<int>(std::floor(t_frac * time_bins)), 0, time_bins - 1);
    int sb = 0;
    if (r.max_station_m > 0.0) {
      sb = std::clamp(static_cast<int>(std::floor(rec.station_m / r.max_station_m * station_bins)), 0,
                      station_bins - 1);
    }
    const auto k = static_cast<std::size_t>(tb * station_bins + sb);
    sum[k] += rec.dissonance;
    ++count[k];
  }
  DissonanceField field{time_bins, station_bins, std::vector<double>(cells, 0.0)};
  for (std::size_t k = 0; k < cells; ++k) {
    if (count[k] > 0) field.values[k] = sum[k] / count[k];
  }
  return field;
}

inline nlohmann::json dissonance_record_to_json(const DissonanceRecord& r) {
  return {{"tick", r.tick},
          {"intensity", r.intensity},
          {"dissonance", r.dissonance},
          {"station_m", r.station_m}};
}

inline nlohmann::json dissonance_field_to_json(const DissonanceField& f) {
  return {{"time_bins", f.time_bins}, {"station_bins", f.station_bins}, {"values", f.values}};
}

/// JSON-lines trace, one record per line.
inline std::string dissonance_trace_jsonl(std::span<const DissonanceRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += dissonance_record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

inline const char* to_string(InputSource s) {
  switch (s) {
    case InputSource::Keyboard: return "keyboard";
    case InputSource::Gamepad: return "gamepad";
    case InputSource::Api: return "api";
  }
  return "api";
}

inline InputSource input_source_from_string(const std::string& s) {
  if (s == "keyboard") return InputSource::Keyboard;
  if (s == "gamepad") return InputSource::Gamepad;
  if (s == "api") return InputSource::Api;
  throw Error(ErrorCode::MalformedCommand, "input source '" + s + "'");
}

}  // namespace interocept
