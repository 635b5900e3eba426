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

#include "shipens/core.hpp"

#include <algorithm>
#include <cmath>

#include "shipens/error.hpp"
#include "shipens/integrate.hpp"

namespace shipens {

Vec6 ShipState::to_vector() const {
  Vec6 x;
  x << pose.x0, pose.y0, pose.psi, vel.u, vel.vm, vel.r;
  return x;
}

ShipState ShipState::from_vector(const Vec6& x) {
  return {{x[0], x[1], x[2]}, {x[3], x[4], x[5]}};
}

bool ShipState::finite() const { return to_vector().allFinite(); }

ShipState ShipState::canonical() const {
  ShipState s = *this;
  s.pose.psi = wrap_angle(s.pose.psi);
  return s;
}

ActuatorState ActuatorState::clipped() const {
  using L = ActuatorLimits;
  return {std::clamp(delta_p, L::kDeltaPMin, L::kDeltaPMax),
          std::clamp(delta_s, L::kDeltaSMin, L::kDeltaSMax), std::clamp(n_bt, L::kNbtMin, L::kNbtMax)};
}

bool ActuatorState::within_limits() const {
  using L = ActuatorLimits;
  return delta_p >= L::kDeltaPMin && delta_p <= L::kDeltaPMax && delta_s >= L::kDeltaSMin &&
         delta_s <= L::kDeltaSMax && n_bt >= L::kNbtMin && n_bt <= L::kNbtMax;
}

double wrap_angle(double a) {
  if (!std::isfinite(a)) throw InvalidArgument("wrap_angle: non-finite angle");
  // remainder() gives [-pi, pi]; fold the lower endpoint onto +pi.
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

Mat3 rotation_matrix(const Pose& pose) {
  const double c = std::cos(pose.psi);
  const double s = std::sin(pose.psi);
  Mat3 r;
  r << c, -s, 0.0,  //
      s, c, 0.0,    //
      0.0, 0.0, 1.0;
  return r;
}

Vec2 true_wind_body_vector(const TrueWind& true_wind, double psi) {
  const double rel = true_wind.direction - psi;
  return {true_wind.speed * std::cos(rel), true_wind.speed * std::sin(rel)};
}

ApparentWind apparent_wind(const TrueWind& true_wind, const ShipState& state) {
  const Vec2 wt = true_wind_body_vector(true_wind, state.pose.psi);
  const double ax = wt[0] - state.vel.u;
  const double ay = wt[1] - state.vel.vm;
  const double speed = std::hypot(ax, ay);
  // atan2(0, 0) is pinned to 0 for the calm singularity. atan2 already lands
  // in [-pi, pi]; only the lower endpoint needs folding. NaN passes through so
  // that blow-ups surface as divergence rather than argument errors.
  double dir = speed == 0.0 ? 0.0 : std::atan2(ay, ax);
  if (dir == -kPi) dir = kPi;
  return {speed, dir};
}

Vec2 apparent_wind_vector(const ApparentWind& aw) {
  return {aw.speed * std::cos(aw.direction), aw.speed * std::sin(aw.direction)};
}

Vec3 pose_rate(const ShipState& state) {
  const double c = std::cos(state.pose.psi);
  const double s = std::sin(state.pose.psi);
  return {state.vel.u * c - state.vel.vm * s, state.vel.u * s + state.vel.vm * c, state.vel.r};
}

Integrator parse_integrator(std::string_view name) {
  if (name == "euler") return Integrator::kEuler;
  if (name == "rk4") return Integrator::kRk4;
  throw ConfigError("unknown integrator '" + std::string(name) + "' (expected euler|rk4)");
}

std::string to_string(Integrator integrator) {
  return integrator == Integrator::kEuler ? "euler" : "rk4";
}

}  // namespace shipens
