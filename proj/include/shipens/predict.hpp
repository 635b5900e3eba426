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

// Particle propagation with an ensemble, trajectory sampling and metrics.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "shipens/sysid.hpp"

namespace shipens {

enum class SamplingScheme {
  kTS1,    // member redrawn per particle per step
  kTSInf,  // one member per particle for the whole rollout
};

SamplingScheme parse_scheme(std::string_view name);
std::string to_string(SamplingScheme scheme);

struct PropagateOptions {
  Integrator integrator = Integrator::kRk4;
  /// TS-inf only: particle p < M * floor(P / M) uses member p mod M; the
  /// remainder is drawn uniformly.
  bool stratified = false;
};

struct ParticleCloud {
  std::vector<double> t;
  std::vector<Eigen::MatrixXd> states;      // per step, 6 x P
  Eigen::MatrixXi assignment;               // steps-1 x P, member driving step k
  std::vector<int> diverged_at;             // per particle: first non-finite step, -1 if none
  std::size_t particles() const { return states.empty() ? 0 : static_cast<std::size_t>(states[0].cols()); }
  std::size_t diverged() const;
};

/// P particles from the identical initial state, driven by the window's
/// actuator and wind rows under zero-order hold. Non-finite particles are
/// frozen at their last finite state and flagged.
ParticleCloud propagate(const EnsembleModel& ensemble, SamplingScheme scheme, const ShipState& x0,
                        const TrajectoryRecord& window, std::size_t p, std::uint64_t seed,
                        const PropagateOptions& opts = {});

struct StepStats {
  Vec3 mean = Vec3::Zero();  // velocity mean
  Mat3 cov = Mat3::Zero();   // population covariance
};

std::vector<StepStats> cloud_stats(const ParticleCloud& cloud);

struct WindowMetric {
  std::size_t window = 0;
  std::string label;
  std::size_t start = 0;
  double eucl = 0.0;  // mean squared Euclidean distance over k = 1..K-1
  double maha = 0.0;  // mean squared Mahalanobis distance over k = 1..K-1
  std::size_t diverged = 0;
  std::size_t degenerate_steps = 0;  // steps whose covariance trace is below 1e-12
  bool ok = true;
  std::string error;
};

/// Distances between the per-step cloud statistics and the true velocities.
/// The covariance gets jitter * I before inversion.
WindowMetric metrics(const std::vector<StepStats>& stats, const std::vector<ShipState>& truth, double jitter = 1e-9);

struct MetricReport {
  double l_eucl = 0.0;  // mean of per-window values over successful windows
  double l_maha = 0.0;
  std::size_t windows_ok = 0;
  std::size_t windows_failed = 0;
  std::size_t diverged_particles = 0;
  std::size_t degenerate_steps = 0;
  std::vector<WindowMetric> per_window;
};

MetricReport aggregate(std::vector<WindowMetric> rows);

struct PredictOptions {
  std::size_t particles = 100;
  std::size_t k = 100;
  double jitter = 1e-9;
  PropagateOptions propagate;
  bool keep_clouds = false;
  std::size_t jobs = 0;
};

struct PredictionResult {
  MetricReport report;
  std::vector<Window> windows;
  std::vector<ParticleCloud> clouds;  // filled when keep_clouds
};

/// Non-overlapping K-windows of every record; each starts at the window's
/// true state (observed when no truth is stored) and is scored against it.
PredictionResult predict_windows(const EnsembleModel& ensemble, SamplingScheme scheme, const Dataset& test,
                                 std::uint64_t seed, const PredictOptions& opts);

inline constexpr const char* kSummaryHeader = "window,label,start,l_eucl,l_maha,diverged,degenerate_steps,status";
inline constexpr const char* kParticleHeader = "window,step,t,particle,member,x0,y0,psi,u,vm,r";

void write_summary_csv(const std::filesystem::path& path, const MetricReport& report);
void write_particles_csv(const std::filesystem::path& path, const PredictionResult& result);

}  // namespace shipens
