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

// Heading-keeping PD control evaluated on ensemble particles and on the
// simulator.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "shipens/predict.hpp"
#include "shipens/vessel_sim.hpp"

namespace shipens {

struct PDGains {
  double kp = 0.0;  // rad rudder per rad heading error
  double kd = 0.0;  // rad rudder per rad/s yaw rate
};

struct PDScenario {
  ShipState initial{{0.0, 0.0, 0.0}, {0.5, 0.0, 0.0}};
  double target = kPi / 2;
  double duration = 100.0;
  TrueWind wind{};  // calm by default

  void validate() const;
};

/// Both rudders at -kp * wrap(psi - target) - kd * r, clipped to +-35 deg;
/// thruster off.
ActuatorState pd_command(const ShipState& state, const PDGains& gains, double target);

struct ClosedLoopOptions {
  double dt_ctrl = 1.0;
  Integrator integrator = Integrator::kRk4;  // learned-model side
  bool model_actuator_lag = false;          // pass model-side commands through the actuator response
  ActuatorResponseConfig actuator;          // used by the lag option
};

struct ClosedLoopResult {
  std::vector<double> t;            // control instants, duration / dt_ctrl + 1
  std::vector<ShipState> states;    // at control instants
  std::vector<ActuatorState> commands;
  double score = 0.0;               // rectangle rule; +inf when diverged
  bool diverged = false;
  bool saturated = false;           // some command reached the rudder limit
};

/// sum_k (|wrap(psi_k - target)| + |r_k|) * dt over k = 0..N-1.
double pd_score(const std::vector<ShipState>& states, double target, double dt);

ClosedLoopResult closed_loop_model(const DynamicsModel& model, const PDGains& gains, const PDScenario& scenario,
                                   const ClosedLoopOptions& opts);

/// Member redrawn uniformly at every control step.
ClosedLoopResult closed_loop_model_ts1(const EnsembleModel& ensemble, const PDGains& gains,
                                       const PDScenario& scenario, const ClosedLoopOptions& opts, std::uint64_t seed);

/// Simulator with actuator response; commands held over each control step.
ClosedLoopResult closed_loop_truth(const SimSetup& truth, const PDGains& gains, const PDScenario& scenario,
                                   const ClosedLoopOptions& opts);

using ClosedLoopFn = std::function<ClosedLoopResult(const PDGains&)>;

struct SweepOptions {
  std::size_t particles = 100;
  SamplingScheme scheme = SamplingScheme::kTSInf;
  bool stratified = false;
  ClosedLoopOptions loop;
  std::size_t jobs = 0;
};

struct SweepCell {
  PDGains gains;
  double score_truth = 0.0;
  std::vector<double> member_scores;    // TS-inf only
  std::vector<int> particle_member;     // TS-inf only
  std::vector<double> particle_scores;
  double score_mean = 0.0;
  double score_worst = 0.0;
  double score_best = 0.0;
  std::size_t diverged = 0;  // particles
  bool ok = true;
  std::string error;
};

struct SweepReport {
  std::vector<SweepCell> cells;
};

std::vector<PDGains> gain_grid(const std::vector<double>& kp, const std::vector<double>& kd);

/// TS-inf sweep over arbitrary per-member evaluators: each particle keeps one
/// member for the whole episode.
SweepReport sweep_evaluators(const std::vector<ClosedLoopFn>& members, const ClosedLoopFn& truth,
                             const std::vector<PDGains>& grid, std::uint64_t seed, const SweepOptions& opts);

SweepReport sweep(const EnsembleModel& ensemble, const SimSetup& truth, const std::vector<PDGains>& grid,
                  const PDScenario& scenario, std::uint64_t seed, const SweepOptions& opts);

inline constexpr const char* kSweepHeader = "kp,kd,score_truth,score_mean,score_worst,score_best,diverged";
inline constexpr const char* kSweepMembersHeader = "kp,kd,member,score";

void write_sweep_csv(const std::filesystem::path& path, const SweepReport& report);
void write_sweep_members_csv(const std::filesystem::path& path, const SweepReport& report);

}  // namespace shipens
