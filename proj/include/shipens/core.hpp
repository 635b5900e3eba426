// Copyright 2026 The shipens Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Domain types and frame transforms shared by the simulator, the learned
// models and the evaluators.
//
// Conventions: earth frame x0 north, y0 east; body frame x forward, y
// starboard. Yaw psi is measured from x0 towards y0. All angles are radians.
// The true wind direction xi_T is the direction the wind blows *from*
// (xi_T = 0 blows from +x0 towards -x0); the apparent wind direction gamma_A
// is measured in the body frame (gamma_A = 0 is a head wind).

#pragma once

#include <Eigen/Core>
#include <numbers>

namespace shipens {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct Pose {
  double x0 = 0.0;
  double y0 = 0.0;
  double psi = 0.0;  // accumulating; see canonical()
};

struct Velocity {
  double u = 0.0;
  double vm = 0.0;
  double r = 0.0;
};

/// Time derivative of a Velocity: (du/dt, dvm/dt, dr/dt).
using Acceleration = Vec3;

struct ShipState {
  Pose pose;
  Velocity vel;

  Vec6 to_vector() const;
  static ShipState from_vector(const Vec6& x);
  bool finite() const;
  /// Same state with psi mapped into (-pi, pi].
  ShipState canonical() const;
};

/// Table-1 actuator limits.
struct ActuatorLimits {
  static constexpr double kDeltaPMin = deg2rad(-105.0);
  static constexpr double kDeltaPMax = deg2rad(35.0);
  static constexpr double kDeltaSMin = deg2rad(-35.0);
  static constexpr double kDeltaSMax = deg2rad(105.0);
  static constexpr double kNbtMin = -30.0;
  static constexpr double kNbtMax = 30.0;
};

struct ActuatorState {
  double delta_p = 0.0;  // port rudder (rad)
  double delta_s = 0.0;  // starboard rudder (rad)
  double n_bt = 0.0;     // bow thruster (1/s)

  Vec3 to_vector() const { return {delta_p, delta_s, n_bt}; }
  static ActuatorState from_vector(const Vec3& a) { return {a[0], a[1], a[2]}; }
  /// Clip every channel into the Table-1 ranges.
  ActuatorState clipped() const;
  bool within_limits() const;
};

struct TrueWind {
  double speed = 0.0;      // U_T (m/s)
  double direction = 0.0;  // xi_T (rad)
};

struct ApparentWind {
  double speed = 0.0;      // U_A (m/s)
  double direction = 0.0;  // gamma_A (rad), (-pi, pi]
};

/// Map an angle into (-pi, pi]. Throws InvalidArgument for non-finite input.
double wrap_angle(double a);

/// Body-to-earth rotation R(eta) for planar motion.
Mat3 rotation_matrix(const Pose& pose);

/// Apparent wind seen from a moving hull: w'_A = w'_T - (u, vm).
ApparentWind apparent_wind(const TrueWind& true_wind, const ShipState& state);

/// (U_A cos gamma_A, U_A sin gamma_A).
Vec2 apparent_wind_vector(const ApparentWind& aw);

/// True wind expressed in the body frame: (U_T cos(xi_T - psi), U_T sin(xi_T - psi)).
Vec2 true_wind_body_vector(const TrueWind& true_wind, double psi);

/// Pose rate eta_dot = R(eta) nu.
Vec3 pose_rate(const ShipState& state);

}  // namespace shipens
