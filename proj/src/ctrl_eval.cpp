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

#include "shipens/ctrl_eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "shipens/error.hpp"
#include "shipens/parallel.hpp"

namespace shipens {

namespace {

constexpr double kRudderLimit = deg2rad(35.0);
constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t step_count(double duration, double dt, const char* what) {
  const double n = duration / dt;
  const double r = std::round(n);
  if (!(r >= 1.0) || std::abs(n - r) > 1e-9 * std::max(1.0, r)) {
    throw ConfigError(std::string(what) + " must be a positive multiple of the step");
  }
  return static_cast<std::size_t>(r);
}

}  // namespace

void PDScenario::validate() const {
  if (!initial.finite()) throw ConfigError("pd scenario: initial state must be finite");
  if (!std::isfinite(target)) throw ConfigError("pd scenario: target heading must be finite");
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ConfigError("pd scenario: duration must be > 0");
  if (!std::isfinite(wind.speed) || wind.speed < 0.0 || !std::isfinite(wind.direction)) {
    throw ConfigError("pd scenario: wind must be finite with speed >= 0");
  }
}

ActuatorState pd_command(const ShipState& state, const PDGains& gains, double target) {
  const double e = std::isfinite(state.pose.psi) ? wrap_angle(state.pose.psi - target) : state.pose.psi;
  const double raw = -gains.kp * e - gains.kd * state.vel.r;
  const double d = std::clamp(raw, -kRudderLimit, kRudderLimit);
  return {d, d, 0.0};
}

double pd_score(const std::vector<ShipState>& states, double target, double dt) {
  if (states.size() < 2) throw InvalidArgument("pd score: need at least two samples");
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    if (!states[k].finite()) return kInf;
    s += (std::abs(wrap_angle(states[k].pose.psi - target)) + std::abs(states[k].vel.r)) * dt;
  }
  return s;
}

namespace {

bool saturates(const ActuatorState& c) { return std::abs(c.delta_p) >= kRudderLimit; }

template <class Pick>
ClosedLoopResult model_loop(const PDGains& gains, const PDScenario& scenario, const ClosedLoopOptions& opts,
                            Pick&& pick) {
  scenario.validate();
  const std::size_t n = step_count(scenario.duration, opts.dt_ctrl, "pd duration");
  ClosedLoopResult r;
  r.t.reserve(n + 1);
  r.states.reserve(n + 1);
  ShipState x = scenario.initial;
  ActuatorState act{};
  for (std::size_t k = 0; k <= n; ++k) {
    r.t.push_back(static_cast<double>(k) * opts.dt_ctrl);
    r.states.push_back(x);
    if (k == n) break;
    const ActuatorState cmd = pd_command(x, gains, scenario.target);
    r.commands.push_back(cmd);
    r.saturated = r.saturated || saturates(cmd);
    const ActuatorState applied = opts.model_actuator_lag ? act : cmd;
    x = model_step(pick(k), x, applied, scenario.wind, opts.dt_ctrl, opts.integrator);
    if (opts.model_actuator_lag) act = actuator_step(act, cmd, opts.dt_ctrl, opts.actuator);
    if (!x.finite()) {
      r.diverged = true;
      r.score = kInf;
      return r;
    }
  }
  r.score = pd_score(r.states, scenario.target, opts.dt_ctrl);
  return r;
}

}  // namespace

ClosedLoopResult closed_loop_model(const DynamicsModel& model, const PDGains& gains, const PDScenario& scenario,
                                   const ClosedLoopOptions& opts) {
  return model_loop(gains, scenario, opts, [&](std::size_t) -> const DynamicsModel& { return model; });
}

ClosedLoopResult closed_loop_model_ts1(const EnsembleModel& ensemble, const PDGains& gains,
                                       const PDScenario& scenario, const ClosedLoopOptions& opts, std::uint64_t seed) {
  if (ensemble.size() < 1) throw InvalidArgument("closed loop: empty ensemble");
  Rng rng(derive_seed(seed, {stream::kAssignment}));
  return model_loop(gains, scenario, opts, [&](std::size_t) -> const DynamicsModel& {
    return ensemble.members[rng() % ensemble.size()].dyn;
  });
}

ClosedLoopResult closed_loop_truth(const SimSetup& truth, const PDGains& gains, const PDScenario& scenario,
                                   const ClosedLoopOptions& opts) {
  scenario.validate();
  const std::size_t n = step_count(scenario.duration, opts.dt_ctrl, "pd duration");
  const std::size_t ratio = step_count(opts.dt_ctrl, truth.dt, "pd control step");
  SimSetup setup = truth;
  setup.wind_mode = WindMode::kCalm;
  ClosedLoopResult r;
  ActuatorState held{};
  auto command = [&](std::size_t k, double, const ShipState& x, const ActuatorState&) {
    if (k % ratio == 0) {
      held = pd_command(x, gains, scenario.target);
      r.commands.push_back(held);
      r.saturated = r.saturated || saturates(held);
    }
    return held;
  };
  SimResult sim;
  try {
    sim = simulate(scenario.initial, command, scenario.wind, setup, scenario.duration, 0);
  } catch (const DivergedError&) {
    r.diverged = true;
    r.score = kInf;
    return r;
  }
  for (std::size_t k = 0; k <= n; ++k) {
    r.t.push_back(sim.t[k * ratio]);
    r.states.push_back(sim.states[k * ratio]);
  }
  r.commands.resize(n);
  r.score = pd_score(r.states, scenario.target, opts.dt_ctrl);
  return r;
}

std::vector<PDGains> gain_grid(const std::vector<double>& kp, const std::vector<double>& kd) {
  std::vector<PDGains> g;
  for (double p : kp) {
    for (double d : kd) {
      if (!std::isfinite(p) || !std::isfinite(d)) throw ConfigError("pd gains must be finite");
      g.push_back({p, d});
    }
  }
  if (g.empty()) throw ConfigError("pd gain grid is empty");
  return g;
}

namespace {

void summarize(SweepCell& c) {
  const auto& s = c.particle_scores;
  c.diverged = static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](double v) { return std::isinf(v); }));
  c.score_worst = *std::max_element(s.begin(), s.end());
  c.score_best = *std::min_element(s.begin(), s.end());
  double sum = 0.0;
  for (double v : s) sum += v;
  c.score_mean = sum / static_cast<double>(s.size());
  // Keep max >= mean exact under rounding.
  c.score_mean = std::clamp(c.score_mean, c.score_best, c.score_worst);
}

std::vector<int> assign_members(std::size_t p, std::size_t m, bool stratified, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {stream::kAssignment}));
  std::vector<int> a(p);
  const std::size_t strat = stratified ? m * (p / m) : 0;
  for (std::size_t i = 0; i < p; ++i) a[i] = static_cast<int>(i < strat ? i % m : rng() % m);
  return a;
}

std::uint64_t cell_seed(std::uint64_t seed, std::size_t i) {
  return derive_seed(seed, {stream::kCell, static_cast<std::uint64_t>(i)});
}

}  // namespace

SweepReport sweep_evaluators(const std::vector<ClosedLoopFn>& members, const ClosedLoopFn& truth,
                             const std::vector<PDGains>& grid, std::uint64_t seed, const SweepOptions& opts) {
  if (members.empty()) throw InvalidArgument("sweep: no member evaluators");
  if (grid.empty()) throw ConfigError("sweep: empty gain grid");
  if (opts.particles < 1) throw ConfigError("sweep: particles must be >= 1");
  SweepReport rep;
  rep.cells.resize(grid.size());
  parallel_for(grid.size(), opts.jobs, [&](std::size_t i) {
    SweepCell& c = rep.cells[i];
    c.gains = grid[i];
    try {
      c.score_truth = truth(c.gains).score;
      c.member_scores.resize(members.size());
      for (std::size_t m = 0; m < members.size(); ++m) c.member_scores[m] = members[m](c.gains).score;
      c.particle_member = assign_members(opts.particles, members.size(), opts.stratified, cell_seed(seed, i));
      for (int m : c.particle_member) c.particle_scores.push_back(c.member_scores[static_cast<std::size_t>(m)]);
      summarize(c);
    } catch (const Error& e) {
      c.ok = false;
      c.error = e.what();
    }
  });
  return rep;
}

SweepReport sweep(const EnsembleModel& ensemble, const SimSetup& truth, const std::vector<PDGains>& grid,
                  const PDScenario& scenario, std::uint64_t seed, const SweepOptions& opts) {
  scenario.validate();
  if (ensemble.size() < 1) throw InvalidArgument("sweep: empty ensemble");
  const ClosedLoopFn truth_fn = [&](const PDGains& g) { return closed_loop_truth(truth, g, scenario, opts.loop); };
  if (opts.scheme == SamplingScheme::kTSInf) {
    std::vector<ClosedLoopFn> fns;
    for (const Member& m : ensemble.members) {
      fns.push_back([&m, &scenario, &opts](const PDGains& g) { return closed_loop_model(m.dyn, g, scenario, opts.loop); });
    }
    return sweep_evaluators(fns, truth_fn, grid, seed, opts);
  }
  if (grid.empty()) throw ConfigError("sweep: empty gain grid");
  if (opts.particles < 1) throw ConfigError("sweep: particles must be >= 1");
  SweepReport rep;
  rep.cells.resize(grid.size());
  parallel_for(grid.size(), opts.jobs, [&](std::size_t i) {
    SweepCell& c = rep.cells[i];
    c.gains = grid[i];
    try {
      c.score_truth = truth_fn(c.gains).score;
      for (std::size_t p = 0; p < opts.particles; ++p) {
        const std::uint64_t s = derive_seed(cell_seed(seed, i), {static_cast<std::uint64_t>(p)});
        c.particle_scores.push_back(closed_loop_model_ts1(ensemble, c.gains, scenario, opts.loop, s).score);
      }
      summarize(c);
    } catch (const Error& e) {
      c.ok = false;
      c.error = e.what();
    }
  });
  return rep;
}

void write_sweep_csv(const std::filesystem::path& path, const SweepReport& report) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  std::fprintf(f, "%s\n", kSweepHeader);
  const double nan = std::nan("");
  for (const SweepCell& c : report.cells) {
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n", c.gains.kp, c.gains.kd, c.ok ? c.score_truth : nan,
                 c.ok ? c.score_mean : nan, c.ok ? c.score_worst : nan, c.ok ? c.score_best : nan, c.diverged);
  }
  if (std::fclose(f) != 0) throw IoError("error writing '" + path.string() + "'");
}

void write_sweep_members_csv(const std::filesystem::path& path, const SweepReport& report) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  std::fprintf(f, "%s\n", kSweepMembersHeader);
  for (const SweepCell& c : report.cells) {
    for (std::size_t m = 0; m < c.member_scores.size(); ++m) {
      std::fprintf(f, "%.17g,%.17g,%zu,%.17g\n", c.gains.kp, c.gains.kd, m, c.member_scores[m]);
    }
  }
  if (std::fclose(f) != 0) throw IoError("error writing '" + path.string() + "'");
}

}  // namespace shipens
