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

// Ground-truth 3-DOF maneuvering simulator (MMG-type force decomposition),
// actuator rate response, Ornstein-Uhlenbeck wind and observation noise.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "shipens/core.hpp"
#include "shipens/rng.hpp"

namespace shipens {

/// One monomial of the hull force polynomial, e.g. "Y_uvv" = coef * u v^2.
struct HullTerm {
  char axis = 'X';  // 'X', 'Y' or 'N'
  int pu = 0;
  int pv = 0;
  int pr = 0;
  double coef = 0.0;

  /// Parse "<axis>_<letters>" where letters are drawn from {u, v, r}.
  /// Total degree must be in [1, 3].
  static HullTerm parse(const std::string& key, double coef);
  std::string key() const;
};

/// Physical parameters of the simulated vessel. Field names double as the
/// config-file keys.
///
/// Hull forces use a polynomial in the reference-speed-scaled velocities
///   X_H = 1/2 rho L_pp d U_ref^2 * sum c (u/U_ref)^a (vm/U_ref)^b (r L_pp/U_ref)^c
/// and likewise for Y_H; N_H carries an extra L_pp. The propeller gives a
/// constant thrust at the fixed revolution n_P. Each rudder produces a normal
/// force proportional to sin of its effective angle in the propeller race.
struct VesselConfig {
  // Rigid body.
  double m = 0.0;
  double m_x = 0.0;
  double m_y = 0.0;
  double x_G = 0.0;
  double I_zz = 0.0;
  double J_zz = 0.0;

  // Hull.
  double L_pp = 0.0;
  double d = 0.0;
  double U_ref = 1.0;
  std::vector<HullTerm> hull;

  // Propeller (fixed revolution).
  double n_P = 10.0;
  double D_P = 0.0;
  double K_T_P = 0.0;
  double t_P = 0.0;

  // Twin rudders behind the propeller.
  double A_R = 0.0;
  double f_alpha = 0.0;
  double x_R = 0.0;
  double t_R = 0.0;
  double a_H = 0.0;
  double x_H = 0.0;
  double k_slip = 0.0;   // race speed^2 = u^2 + k_slip (n_P D_P)^2
  double gamma_R = 0.0;  // flow-straightening of the local drift angle

  // Bow thruster.
  double a_YSB1 = 0.0, a_YSB2 = 0.0, a_YSB3 = 0.0;
  double a_NSB1 = 0.0, a_NSB2 = 0.0, a_NSB3 = 0.0;
  double x_BT = 0.0;
  double D_BT = 0.0;
  double K_T_BT = 0.0;

  // Wind loads.
  double rho_A = 1.2;
  double A_T = 0.0;
  double A_L = 0.0;
  double L_OA = 0.0;
  double X_0 = 0.0, X_1 = 0.0, X_3 = 0.0, X_5 = 0.0;
  double Y_1 = 0.0, Y_3 = 0.0, Y_5 = 0.0;
  double N_1 = 0.0, N_2 = 0.0, N_3 = 0.0;

  double rho = 1000.0;
  double g = 9.80665;

  /// Throws ConfigError when a physical invariant is violated.
  void validate() const;

  /// Synthetic 3 m twin-rudder model ship shipped as the default. These
  /// numbers are invented to give stable, varied dynamics; they do not
  /// describe any real hull.
  static VesselConfig synthetic_model_ship();
};

struct Forces {
  double X = 0.0;
  double Y = 0.0;
  double N = 0.0;
};

Forces hull_force(const ShipState& state, const VesselConfig& cfg);
Forces propeller_force(const VesselConfig& cfg);
Forces rudder_force(const ShipState& state, const ActuatorState& act, const VesselConfig& cfg);
Forces thruster_force(const ShipState& state, const ActuatorState& act, const VesselConfig& cfg);
Forces wind_force(const ApparentWind& aw, const VesselConfig& cfg);

/// Wind-pressure coefficients (C_X, C_Y, C_N) at apparent direction gamma_A.
Vec3 wind_coefficients(double gamma_a, const VesselConfig& cfg);

/// Sum of all force contributions.
Forces total_force(const ShipState& state, const ActuatorState& act, const ApparentWind& aw,
                   const VesselConfig& cfg);

/// Solve the coupled 3-DOF equations of motion for (du/dt, dvm/dt, dr/dt).
Acceleration mmg_accel(const ShipState& state, const ActuatorState& act, const ApparentWind& aw,
                       const VesselConfig& cfg);

/// Solve the equations of motion for given total forces.
Acceleration solve_motion(const ShipState& state, const Forces& f, const VesselConfig& cfg);

struct ActuatorResponseConfig {
  std::array<double, 3> rate{deg2rad(20.0), deg2rad(20.0), 20.0};
  /// Width of the linear band of the step function; non-positive entries
  /// mean "one step of travel" (rate * dt).
  std::array<double, 3> eps{0.0, 0.0, 0.0};

  void validate() const;
};

/// Saturated-slope step function: sign(y) outside (-eps, eps), y/eps inside.
double f_step(double y, double eps);

/// One Euler step of the rate-limited actuator response.
ActuatorState actuator_step(const ActuatorState& current, const ActuatorState& command, double dt,
                            const ActuatorResponseConfig& cfg);

struct WindProcessConfig {
  double alpha_U = -0.1;
  double sigma_U = 0.1;
  double mean_speed = 1.0;
  double alpha_gamma = -0.1;
  double sigma_gamma = deg2rad(5.0);
  double mean_direction = 0.0;

  void validate() const;
};

/// Euler-Maruyama step of the mean-reverting wind speed/direction filter.
TrueWind wind_step(const TrueWind& w, double dt, const WindProcessConfig& cfg, Rng& rng);

/// Observation noise standard deviations, ordered (x0, y0, psi, u, vm, r).
/// Infinite entries are not polluted and carry zero likelihood weight.
struct NoiseConfig {
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  std::array<double, 6> sigma{kInf, kInf, kInf, 0.01, 0.01, deg2rad(0.1)};

  void validate() const;
};

/// Add independent Gaussian noise to each sample. Channels with infinite or
/// zero sigma are left untouched. Deterministic given `seed`.
std::vector<ShipState> pollute(const std::vector<ShipState>& clean, const NoiseConfig& noise,
                               std::uint64_t seed);

/// Commands for step k given time, current state and current actuator state.
using CommandFn = std::function<ActuatorState(std::size_t k, double t, const ShipState& x,
                                              const ActuatorState& act)>;

enum class WindMode {
  kCalm,     // wind stays at its initial value
  kProcess,  // OU process
  kReplay,   // supplied per-step sequence
};

struct SimSetup {
  VesselConfig vessel;
  ActuatorResponseConfig actuator;
  WindProcessConfig wind;
  double dt = 0.1;
  /// When false the command is applied directly as the actuator state.
  bool actuator_lag = true;
  WindMode wind_mode = WindMode::kProcess;
  std::vector<TrueWind> wind_replay;  // used by kReplay, one entry per step
};

struct SimResult {
  std::vector<double> t;
  std::vector<ShipState> states;  // psi accumulating
  std::vector<ActuatorState> act;
  std::vector<TrueWind> wind;
  std::vector<ActuatorState> commands;
};

/// Full state derivative x_dot = (R(eta) nu, F(nu, u, w_A)) of the simulator.
Vec6 vessel_derivative(const ShipState& state, const ActuatorState& act, const TrueWind& wind,
                       const VesselConfig& cfg);

/// RK4-integrate the vessel for `duration` seconds at setup.dt with actuator
/// and wind held constant over each step. Produces duration/dt + 1 samples.
/// Throws DivergedError on a non-finite state.
SimResult simulate(const ShipState& initial, const CommandFn& commands, const TrueWind& wind_init,
                   const SimSetup& setup, double duration, std::uint64_t seed,
                   const ActuatorState& act_init = {});

}  // namespace shipens
