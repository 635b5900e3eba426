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

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/LU>

#include "doctest.h"
#include "shipens/core.hpp"
#include "shipens/error.hpp"
#include "shipens/integrate.hpp"

using namespace shipens;

TEST_CASE("rotation_matrix") {
  CHECK(rotation_matrix({0, 0, 0}).isApprox(Mat3::Identity(), 1e-15));
  Mat3 q;
  q << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((rotation_matrix({0, 0, kPi / 2}) - q).cwiseAbs().maxCoeff() < 1e-15);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ang(-20.0, 20.0);
  for (int i = 0; i < 100; ++i) {
    const double psi = ang(rng);
    const Mat3 r = rotation_matrix({0, 0, psi});
    CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((r * rotation_matrix({0, 0, -psi}) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("apparent_wind examples") {
  ShipState s;
  auto aw = apparent_wind({5.0, 0.0}, s);
  CHECK(aw.speed == 5.0);
  CHECK(aw.direction == 0.0);

  s.vel.u = 2.0;
  aw = apparent_wind({0.0, 0.0}, s);
  CHECK(aw.speed == 2.0);
  CHECK(aw.direction == doctest::Approx(kPi).epsilon(1e-15));

  ShipState still;
  aw = apparent_wind({0.0, 1.0}, still);
  CHECK(aw.speed == 0.0);
  CHECK(aw.direction == 0.0);
}

TEST_CASE("apparent_wind matches the vector-subtraction oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(-3.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    ShipState s{{uni(rng), uni(rng), uni(rng) * 4}, {uni(rng), uni(rng), uni(rng)}};
    TrueWind tw{std::abs(uni(rng)) * 3, uni(rng) * 3};
    const double wx = tw.speed * std::cos(tw.direction - s.pose.psi) - s.vel.u;
    const double wy = tw.speed * std::sin(tw.direction - s.pose.psi) - s.vel.vm;
    const auto aw = apparent_wind(tw, s);
    CHECK(std::abs(aw.speed - std::hypot(wx, wy)) < 1e-12);
    CHECK(std::abs(wrap_angle(aw.direction - std::atan2(wy, wx))) < 1e-12);
    const Vec2 v = apparent_wind_vector(aw);
    CHECK(std::abs(v[0] - wx) < 1e-12);
    CHECK(std::abs(v[1] - wy) < 1e-12);

    // Invariance under 2 pi shifts.
    ShipState s2 = s;
    s2.pose.psi += 2 * kPi;
    const auto aw2 = apparent_wind({tw.speed, tw.direction - 2 * kPi}, s2);
    CHECK(std::abs(aw2.speed - aw.speed) < 1e-12);
    CHECK(std::abs(wrap_angle(aw2.direction - aw.direction)) < 1e-9);
  }
}

TEST_CASE("apparent_wind at rest equals the relative true wind") {
  ShipState s{{0, 0, 0.7}, {0, 0, 0}};
  const auto aw = apparent_wind({3.0, 2.5}, s);
  CHECK(aw.speed == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(aw.direction == doctest::Approx(wrap_angle(2.5 - 0.7)).epsilon(1e-14));
}

TEST_CASE("apparent_wind_vector examples") {
  const Vec2 a = apparent_wind_vector({5.0, 0.0});
  CHECK(a[0] == 5.0);
  CHECK(a[1] == 0.0);
  const Vec2 b = apparent_wind_vector({5.0, kPi});
  CHECK(b[0] == doctest::Approx(-5.0));
  CHECK(std::abs(b[1]) < 1e-12);
}

TEST_CASE("wrap_angle") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-3 * kPi / 2) == doctest::Approx(kPi / 2));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(kPi) == kPi);
  for (double a = -50.0; a < 50.0; a += 0.37) {
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    CHECK(wrap_angle(w) == w);
    CHECK(std::abs(std::remainder(a - w, 2 * kPi)) < 1e-12);
  }
  CHECK_THROWS_AS(wrap_angle(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
  CHECK_THROWS_AS(wrap_angle(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST_CASE("actuator limits and canonical state") {
  ActuatorState a{deg2rad(-200), deg2rad(200), 99};
  CHECK_FALSE(a.within_limits());
  const auto c = a.clipped();
  CHECK(c.within_limits());
  CHECK(c.delta_p == ActuatorLimits::kDeltaPMin);
  CHECK(c.delta_s == ActuatorLimits::kDeltaSMax);
  CHECK(c.n_bt == 30.0);

  ShipState s{{1, 2, 7.0}, {0.1, 0.2, 0.3}};
  CHECK(s.canonical().pose.psi == doctest::Approx(7.0 - 2 * kPi));
  CHECK(ShipState::from_vector(s.to_vector()).to_vector() == s.to_vector());
}

TEST_CASE("integrators") {
  CHECK(parse_integrator("euler") == Integrator::kEuler);
  CHECK(parse_integrator("rk4") == Integrator::kRk4);
  CHECK_THROWS_AS(parse_integrator("midpoint"), ConfigError);

  // dx/dt = x, one step from 1.
  auto f = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; };
  Eigen::VectorXd x = Eigen::VectorXd::Ones(1);
  CHECK(euler_step(x, 0.1, f)[0] == doctest::Approx(1.1));
  const double rk = rk4_step(x, 0.1, f)[0];
  CHECK(rk == doctest::Approx(1.0 + 0.1 + 0.005 + 0.1 * 0.1 * 0.1 / 6 + 0.1 * 0.1 * 0.1 * 0.1 / 24).epsilon(1e-14));
}
