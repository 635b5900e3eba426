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

#include "shipens/vessel_sim.hpp"

#include <algorithm>
#include <cmath>

#include "shipens/error.hpp"
#include "shipens/integrate.hpp"

namespace shipens {

namespace {

double ipow(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("vessel: ") + name + " must be > 0");
}

}  // namespace

HullTerm HullTerm::parse(const std::string& key, double coef) {
  HullTerm t;
  t.coef = coef;
  if (key.size() < 3 || key[1] != '_' || (key[0] != 'X' && key[0] != 'Y' && key[0] != 'N')) {
    throw ConfigError("hull term '" + key + "': expected <X|Y|N>_<uvr letters>");
  }
  t.axis = key[0];
  for (std::size_t i = 2; i < key.size(); ++i) {
    switch (key[i]) {
      case 'u': ++t.pu; break;
      case 'v': ++t.pv; break;
      case 'r': ++t.pr; break;
      default: throw ConfigError("hull term '" + key + "': unexpected letter '" + key[i] + "'");
    }
  }
  const int degree = t.pu + t.pv + t.pr;
  if (degree < 1 || degree > 3) throw ConfigError("hull term '" + key + "': degree must be 1..3");
  return t;
}

std::string HullTerm::key() const {
  std::string k{axis, '_'};
  k.append(pu, 'u').append(pv, 'v').append(pr, 'r');
  return k;
}

void VesselConfig::validate() const {
  require_positive(m, "m");
  require_positive(m + m_x, "m + m_x");
  require_positive(m + m_y, "m + m_y");
  require_positive(I_zz + J_zz + x_G * x_G * m, "I_zz + J_zz + x_G^2 m");
  require_positive(rho, "rho");
  require_positive(rho_A, "rho_A");
  require_positive(L_pp, "L_pp");
  require_positive(d, "d");
  require_positive(U_ref, "U_ref");
  require_positive(A_T, "A_T");
  require_positive(A_L, "A_L");
  require_positive(L_OA, "L_OA");
  require_positive(g, "g");
  const double det = (m + m_y) * (I_zz + J_zz + x_G * x_G * m) - (x_G * m) * (x_G * m);
  if (!(std::abs(det) > 0.0)) throw ConfigError("vessel: singular sway/yaw mass matrix");
}

VesselConfig VesselConfig::synthetic_model_ship() {
  VesselConfig c;
  c.m = 230.0;
  c.m_x = 12.0;
  c.m_y = 180.0;
  c.x_G = 0.05;
  c.I_zz = 130.0;
  c.J_zz = 60.0;

  c.L_pp = 3.0;
  c.d = 0.2;
  c.U_ref = 1.0;
  const std::pair<const char*, double> hull[] = {
      {"X_u", -0.02},   {"X_uuu", -0.04}, {"X_vv", -0.05},  {"X_vr", 0.10},   {"X_rr", -0.01},
      {"Y_v", -0.10},   {"Y_uv", -0.30},  {"Y_ur", 0.05},   {"Y_vvv", -0.80}, {"Y_vvr", -0.30},
      {"Y_vrr", -0.30}, {"Y_rrr", -0.02}, {"N_v", -0.02},   {"N_uv", -0.08},  {"N_r", -0.03},
      {"N_ur", -0.05},  {"N_vvv", -0.05}, {"N_vvr", -0.10}, {"N_rrr", -0.03},
  };
  for (const auto& [key, coef] : hull) c.hull.push_back(HullTerm::parse(key, coef));

  c.n_P = 10.0;
  c.D_P = 0.12;
  c.K_T_P = 0.4;
  c.t_P = 0.2;

  c.A_R = 0.02;
  c.f_alpha = 2.0;
  c.x_R = -1.5;
  c.t_R = 0.2;
  c.a_H = 0.2;
  c.x_H = -1.35;
  c.k_slip = 0.19;
  c.gamma_R = 0.5;

  c.a_YSB1 = 0.0;
  c.a_YSB2 = -1.5;
  c.a_YSB3 = 0.5;
  c.a_NSB1 = 0.0;
  c.a_NSB2 = -1.8;
  c.a_NSB3 = 0.6;
  c.x_BT = 1.2;
  c.D_BT = 0.08;
  c.K_T_BT = 0.12;

  c.rho_A = 1.2;
  c.A_T = 0.15;
  c.A_L = 0.5;
  c.L_OA = 3.1;
  c.X_0 = 0.0;
  c.X_1 = 0.6;
  c.X_3 = 0.05;
  c.X_5 = 0.02;
  c.Y_1 = -0.8;
  c.Y_3 = 0.05;
  c.Y_5 = 0.0;
  c.N_1 = -0.1;
  c.N_2 = -0.05;
  c.N_3 = 0.0;

  c.rho = 1000.0;
  c.g = 9.80665;
  return c;
}

Forces hull_force(const ShipState& state, const VesselConfig& cfg) {
  const double un = state.vel.u / cfg.U_ref;
  const double vn = state.vel.vm / cfg.U_ref;
  const double rn = state.vel.r * cfg.L_pp / cfg.U_ref;
  const double scale = 0.5 * cfg.rho * cfg.L_pp * cfg.d * cfg.U_ref * cfg.U_ref;
  Forces f;
  for (const HullTerm& t : cfg.hull) {
    const double mono = t.coef * ipow(un, t.pu) * ipow(vn, t.pv) * ipow(rn, t.pr);
    switch (t.axis) {
      case 'X': f.X += mono; break;
      case 'Y': f.Y += mono; break;
      default: f.N += mono; break;
    }
  }
  f.X *= scale;
  f.Y *= scale;
  f.N *= scale * cfg.L_pp;
  return f;
}

Forces propeller_force(const VesselConfig& cfg) {
  const double n = cfg.n_P;
  const double thrust = cfg.rho * n * n * std::pow(cfg.D_P, 4) * cfg.K_T_P;
  return {(1.0 - cfg.t_P) * thrust, 0.0, 0.0};
}

Forces rudder_force(const ShipState& state, const ActuatorState& act, const VesselConfig& cfg) {
  // Race speed: forward speed only (C1 at u = 0) plus the propeller slipstream.
  const double u_fwd = std::max(state.vel.u, 0.0);
  const double nd = cfg.n_P * cfg.D_P;
  const double ur2 = u_fwd * u_fwd + cfg.k_slip * nd * nd;
  const double ur = std::sqrt(ur2);
  const double drift = ur > 0.0 ? std::atan2(state.vel.vm + cfg.x_R * state.vel.r, ur) : 0.0;
  const double q = 0.5 * cfg.rho * cfg.A_R * cfg.f_alpha * ur2;
  Forces f;
  for (double delta : {act.delta_p, act.delta_s}) {
    const double fn = q * std::sin(delta + cfg.gamma_R * drift);
    f.X += -(1.0 - cfg.t_R) * fn * std::sin(delta);
    f.Y += -(1.0 + cfg.a_H) * fn * std::cos(delta);
    f.N += -(cfg.x_R + cfg.a_H * cfg.x_H) * fn * std::cos(delta);
  }
  return f;
}

Forces thruster_force(const ShipState& state, const ActuatorState& act, const VesselConfig& cfg) {
  const double fr = state.vel.u / std::sqrt(cfg.g * cfg.L_pp);
  const double n = act.n_bt;
  // Signed thrust so that reversing the thruster reverses the force.
  const double thrust = cfg.rho * std::pow(cfg.D_BT, 4) * n * std::abs(n) * cfg.K_T_BT;
  Forces f;
  f.X = 0.0;
  f.Y = (1.0 + cfg.a_YSB1 + cfg.a_YSB2 * fr + cfg.a_YSB3 * fr * fr) * thrust;
  f.N = (1.0 + cfg.a_NSB1 + cfg.a_NSB2 * fr + cfg.a_NSB3 * fr * fr) * thrust * cfg.x_BT;
  return f;
}

Vec3 wind_coefficients(double gamma_a, const VesselConfig& cfg) {
  const double a = 2.0 * kPi - gamma_a;
  return {cfg.X_0 + cfg.X_1 * std::cos(a) + cfg.X_3 * std::cos(3.0 * a) + cfg.X_5 * std::cos(5.0 * a),
          cfg.Y_1 * std::sin(a) + cfg.Y_3 * std::sin(3.0 * a) + cfg.Y_5 * std::sin(5.0 * a),
          cfg.N_1 * std::sin(a) + cfg.N_2 * std::sin(2.0 * a) + cfg.N_3 * std::sin(3.0 * a)};
}

Forces wind_force(const ApparentWind& aw, const VesselConfig& cfg) {
  const Vec3 c = wind_coefficients(aw.direction, cfg);
  const double q = 0.5 * cfg.rho_A * aw.speed * aw.speed;
  return {q * cfg.A_T * c[0], q * cfg.A_L * c[1], q * cfg.A_L * cfg.L_OA * c[2]};
}

Forces total_force(const ShipState& state, const ActuatorState& act, const ApparentWind& aw,
                   const VesselConfig& cfg) {
  const Forces parts[] = {hull_force(state, cfg), propeller_force(cfg), rudder_force(state, act, cfg),
                          thruster_force(state, act, cfg), wind_force(aw, cfg)};
  Forces sum;
  for (const Forces& p : parts) {
    sum.X += p.X;
    sum.Y += p.Y;
    sum.N += p.N;
  }
  return sum;
}

Acceleration solve_motion(const ShipState& state, const Forces& f, const VesselConfig& cfg) {
  const double u = state.vel.u;
  const double v = state.vel.vm;
  const double r = state.vel.r;
  const double mx = cfg.m + cfg.m_x;
  const double my = cfg.m + cfg.m_y;
  const double xgm = cfg.x_G * cfg.m;
  const double iz = cfg.I_zz + cfg.J_zz + cfg.x_G * xgm;

  const double udot = (f.X + my * v * r + xgm * r * r) / mx;

  // [my  xgm; xgm  iz] [vdot; rdot] = [Y - mx u r; N - xgm u r]
  const double b1 = f.Y - mx * u * r;
  const double b2 = f.N - xgm * u * r;
  const double det = my * iz - xgm * xgm;
  if (det == 0.0) throw ConfigError("vessel: singular sway/yaw mass matrix");
  const double vdot = (iz * b1 - xgm * b2) / det;
  const double rdot = (my * b2 - xgm * b1) / det;
  return {udot, vdot, rdot};
}

Acceleration mmg_accel(const ShipState& state, const ActuatorState& act, const ApparentWind& aw,
                       const VesselConfig& cfg) {
  return solve_motion(state, total_force(state, act, aw, cfg), cfg);
}

void ActuatorResponseConfig::validate() const {
  for (double k : rate) {
    if (!(k > 0.0)) throw ConfigError("actuator: rates must be > 0");
  }
}

double f_step(double y, double eps) {
  if (y >= eps) return 1.0;
  if (y <= -eps) return -1.0;
  return y / eps;
}

ActuatorState actuator_step(const ActuatorState& current, const ActuatorState& command, double dt,
                            const ActuatorResponseConfig& cfg) {
  if (!(dt > 0.0)) throw InvalidArgument("actuator_step: dt must be > 0");
  const Vec3 y = current.to_vector();
  const Vec3 r = command.to_vector();
  Vec3 next;
  for (int i = 0; i < 3; ++i) {
    const double eps = cfg.eps[i] > 0.0 ? cfg.eps[i] : cfg.rate[i] * dt;
    next[i] = y[i] + dt * cfg.rate[i] * f_step(r[i] - y[i], eps);
  }
  return ActuatorState::from_vector(next).clipped();
}

void WindProcessConfig::validate() const {
  if (!(alpha_U < 0.0) || !(alpha_gamma < 0.0)) throw ConfigError("wind: alpha_U and alpha_gamma must be < 0");
  if (sigma_U < 0.0 || sigma_gamma < 0.0) throw ConfigError("wind: sigmas must be >= 0");
  if (mean_speed < 0.0) throw ConfigError("wind: mean_speed must be >= 0");
}

TrueWind wind_step(const TrueWind& w, double dt, const WindProcessConfig& cfg, Rng& rng) {
  if (!(dt > 0.0)) throw InvalidArgument("wind_step: dt must be > 0");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double z1 = normal(rng);
  const double z2 = normal(rng);
  const double sq = std::sqrt(dt);
  TrueWind next;
  next.speed = w.speed + cfg.alpha_U * (w.speed - cfg.mean_speed) * dt + cfg.sigma_U * sq * z1;
  next.speed = std::max(next.speed, 0.0);
  next.direction = w.direction + cfg.alpha_gamma * (w.direction - cfg.mean_direction) * dt + cfg.sigma_gamma * sq * z2;
  return next;
}

void NoiseConfig::validate() const {
  for (double s : sigma) {
    if (std::isnan(s) || s < 0.0) throw ConfigError("noise: sigma entries must be >= 0 or infinite");
  }
}

std::vector<ShipState> pollute(const std::vector<ShipState>& clean, const NoiseConfig& noise,
                               std::uint64_t seed) {
  Rng rng(derive_seed(seed, {stream::kNoise}));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<ShipState> out;
  out.reserve(clean.size());
  for (const ShipState& s : clean) {
    Vec6 x = s.to_vector();
    for (int c = 0; c < 6; ++c) {
      const double sd = noise.sigma[c];
      // One draw per channel regardless of sigma keeps streams aligned.
      const double z = normal(rng);
      if (std::isfinite(sd) && sd > 0.0) x[c] += sd * z;
    }
    out.push_back(ShipState::from_vector(x));
  }
  return out;
}

Vec6 vessel_derivative(const ShipState& state, const ActuatorState& act, const TrueWind& wind,
                       const VesselConfig& cfg) {
  Vec6 dx;
  dx.head<3>() = pose_rate(state);
  dx.tail<3>() = mmg_accel(state, act, apparent_wind(wind, state), cfg);
  return dx;
}

SimResult simulate(const ShipState& initial, const CommandFn& commands, const TrueWind& wind_init,
                   const SimSetup& setup, double duration, std::uint64_t seed, const ActuatorState& act_init) {
  if (!(setup.dt > 0.0)) throw InvalidArgument("simulate: dt must be > 0");
  const double steps_real = duration / setup.dt;
  const auto n = static_cast<std::size_t>(std::llround(steps_real));
  if (duration < 0.0 || std::abs(steps_real - static_cast<double>(n)) > 1e-9 * std::max(1.0, steps_real)) {
    throw InvalidArgument("simulate: duration must be a non-negative multiple of dt");
  }
  if (setup.wind_mode == WindMode::kReplay && setup.wind_replay.size() < n + 1) {
    throw InvalidArgument("simulate: wind replay shorter than the simulation");
  }
  setup.vessel.validate();

  Rng wind_rng(derive_seed(seed, {stream::kWind}));
  SimResult out;
  out.t.reserve(n + 1);
  out.states.reserve(n + 1);
  out.act.reserve(n + 1);
  out.wind.reserve(n + 1);
  out.commands.reserve(n + 1);

  Vec6 x = initial.to_vector();
  ActuatorState act = act_init.clipped();
  TrueWind wind = wind_init;
  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * setup.dt;
    if (setup.wind_mode == WindMode::kReplay) wind = setup.wind_replay[k];
    const ShipState state = ShipState::from_vector(x);
    const ActuatorState cmd = commands ? commands(k, t, state, act) : act;
    if (!setup.actuator_lag) act = cmd.clipped();

    out.t.push_back(t);
    out.states.push_back(state);
    out.act.push_back(act);
    out.wind.push_back(wind);
    out.commands.push_back(cmd);
    if (k == n) break;

    const VesselConfig& vessel = setup.vessel;
    x = rk4_step(x, setup.dt, [&](const Vec6& xs) {
      return vessel_derivative(ShipState::from_vector(xs), act, wind, vessel);
    });
    if (!x.allFinite()) throw DivergedError("simulation diverged", k + 1);

    if (setup.actuator_lag) act = actuator_step(act, cmd, setup.dt, setup.actuator);
    if (setup.wind_mode == WindMode::kProcess) wind = wind_step(wind, setup.dt, setup.wind, wind_rng);
  }
  return out;
}

}  // namespace shipens
