#pragma once

#include <cmath>
#include <numbers>

#include "interocept/error.hpp"

namespace interocept {

struct RobotPose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // (-pi, pi]

  bool operator==(const RobotPose&) const = default;
};

/// Wraps to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * std::numbers::pi);
  if (r <= -std::numbers::pi) r += 2.0 * std::numbers::pi;
  return r;
}

struct DiffDriveParams {
  double wheel_radius = 0.03;  // m
  double axle_length = 0.12;   // m
  double v_max = 0.6;          // m/s
  double w_max = 2.0;          // rad/s

  void validate() const {
    if (!(wheel_radius > 0.0) || !(axle_length > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "wheel radius and axle length must be > 0");
    }
  }
};

struct WheelSpeeds {
  double left = 0.0;   // rad/s
  double right = 0.0;  // rad/s
};

inline WheelSpeeds to_wheel_speeds(double v, double w, const DiffDriveParams& p) {
  return {(v - w * p.axle_length / 2.0) / p.wheel_radius, (v + w * p.axle_length / 2.0) / p.wheel_radius};
}

struct BodyVelocity {
  double v = 0.0;
  double w = 0.0;
};

inline BodyVelocity from_wheel_speeds(const WheelSpeeds& s, const DiffDriveParams& p) {
  return {p.wheel_radius * (s.right + s.left) / 2.0, p.wheel_radius * (s.right - s.left) / p.axle_length};
}

/// Exact constant-(v, w) arc over dt; straight-line update when |w| < 1e-9.
inline RobotPose integrate_unicycle(const RobotPose& pose, double v, double w, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt must be > 0");
  RobotPose out = pose;
  if (std::abs(w) < 1e-9) {
    out.x += v * std::cos(pose.theta) * dt;
    out.y += v * std::sin(pose.theta) * dt;
  } else {
    const double turned = pose.theta + w * dt;
    out.x += (v / w) * (std::sin(turned) - std::sin(pose.theta));
    out.y -= (v / w) * (std::cos(turned) - std::cos(pose.theta));
  }
  out.theta = wrap_angle(pose.theta + w * dt);
  return out;
}

}  // namespace interocept
