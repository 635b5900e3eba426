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

// Maneuver generation, observation resampling, windowing, standardization
// statistics and the trajectory CSV / manifest formats.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "shipens/core.hpp"
#include "shipens/vessel_sim.hpp"

namespace shipens {

/// Time-stamped observations, actuator states and true wind. `truth` holds
/// the noise-free states when known (simulation) and is empty otherwise.
/// Stored yaw angles are wrapped into (-pi, pi].
struct TrajectoryRecord {
  std::string label;
  std::vector<double> t;
  std::vector<ShipState> obs;
  std::vector<ActuatorState> act;
  std::vector<TrueWind> wind;
  std::vector<ShipState> truth;

  std::size_t size() const { return t.size(); }
  bool has_truth() const { return !truth.empty(); }
  /// Throws InvalidArgument on length mismatch or non-increasing time.
  void validate() const;
  /// Rows [begin, begin + count).
  TrajectoryRecord slice(std::size_t begin, std::size_t count) const;
};

struct Dataset {
  std::string split;
  std::uint64_t seed = 0;
  std::string generator;
  std::vector<TrajectoryRecord> records;
};

/// Everything the maneuver generators need.
struct GenConfig {
  VesselConfig vessel = VesselConfig::synthetic_model_ship();
  ActuatorResponseConfig actuator;
  WindProcessConfig wind;
  NoiseConfig noise;
  double dt_sim = 0.1;
  double dt_obs = 1.0;
  double duration = 200.0;
  double initial_u = 0.6;

  void validate() const;
};

// Generators return clean records sampled at dt_sim with obs == truth.

/// delta-psi zigzag without wind. Both rudders start at +delta and flip
/// whenever the heading deviation crosses +-psi_switch.
TrajectoryRecord gen_zigzag(double delta, double psi_switch, const GenConfig& cfg, std::uint64_t seed);

/// Constant rudder angle on both rudders from t = 0, without wind.
TrajectoryRecord gen_turning(double delta, const GenConfig& cfg, std::uint64_t seed);

/// One pre-clip random command: delta_p ~ N(-80 deg, 30 deg), delta_s ~
/// N(80 deg, 30 deg), n_bt ~ N(0, 15).
ActuatorState draw_random_command(Rng& rng);

/// Randomly resampled actuator commands every `hold` seconds under wind.
TrajectoryRecord gen_random(const GenConfig& cfg, std::uint64_t seed, double hold = 20.0);

/// Input schedule for replay: commanded actuator values and true wind,
/// held constant from each row's time until the next row.
struct Script {
  std::vector<double> t;
  std::vector<ActuatorState> cmd;
  std::vector<TrueWind> wind;
};

enum class ScriptMode {
  kCommand,  // rows are commands passed through the actuator response
  kState,    // rows are actuator states applied directly
};

/// Replay a script through the simulator. A non-positive duration means the
/// script's own length. Throws InvalidArgument when the script is shorter
/// than the requested duration.
TrajectoryRecord gen_scripted(const Script& script, const GenConfig& cfg, std::uint64_t seed,
                              ScriptMode mode = ScriptMode::kCommand, double duration = 0.0,
                              const ShipState* initial = nullptr);

/// Script replaying a record's own actuator states and wind.
Script script_from_record(const TrajectoryRecord& rec);

/// Synthetic berthing-like input schedule: decelerating approach, rudder
/// braking and thruster-assisted rotation under a mean-reverting wind.
Script make_berthing_script(std::uint64_t seed, const GenConfig& cfg);

/// Subsample by index. dt_obs must be an integer multiple of the record step.
TrajectoryRecord resample(const TrajectoryRecord& rec, double dt_obs);

/// Set obs = pollute(truth). Requires truth.
TrajectoryRecord observe(const TrajectoryRecord& clean, const NoiseConfig& noise, std::uint64_t seed);

struct Window {
  TrajectoryRecord rec;
  std::size_t source = 0;  // record index in the dataset
  std::size_t start = 0;   // first row in the source record
};

struct WindowSet {
  std::vector<Window> windows;
  std::size_t skipped = 0;  // records shorter than K
};

/// Fixed-length K-step windows with the given stride.
WindowSet window(const Dataset& data, std::size_t k, std::size_t stride);

/// Model input vector (u, vm, r, delta_p, delta_s, n_bt, U_A cos gamma_A, U_A sin gamma_A).
using Features = Eigen::Matrix<double, 8, 1>;
Features featurize(const ShipState& state, const ActuatorState& act, const TrueWind& wind);

inline const std::array<const char*, 8> kFeatureNames{"u",       "vm",   "r",    "delta_p",
                                                      "delta_s", "n_bt", "wA_x", "wA_y"};

struct StandardizationStats {
  Features in_mean = Features::Zero();
  Features in_std = Features::Ones();
  Vec3 out_mean = Vec3::Zero();
  Vec3 out_std = Vec3::Ones();
};

/// Central-difference accelerations of the observed velocities (one-sided
/// at the ends, per-row dt).
std::vector<Vec3> finite_difference_accel(const TrajectoryRecord& rec);

/// Population mean/std over every training sample. Throws InvalidArgument
/// naming the channel when a std is zero.
StandardizationStats compute_stats(const Dataset& train);

// Trajectory CSV: t,x0,y0,psi,u,vm,r,delta_p,delta_s,n_bt,U_T,xi_T.
inline constexpr const char* kTrajectoryHeader = "t,x0,y0,psi,u,vm,r,delta_p,delta_s,n_bt,U_T,xi_T";

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryRecord& rec, bool truth = false);
TrajectoryRecord read_trajectory_csv(const std::filesystem::path& path, const std::string& label = "");

// Script CSV: t,delta_p,delta_s,n_bt,U_T,xi_T (extra columns are ignored,
// so a trajectory CSV is also a valid script).
inline constexpr const char* kScriptHeader = "t,delta_p,delta_s,n_bt,U_T,xi_T";

void write_script_csv(const std::filesystem::path& path, const Script& script);
Script read_script_csv(const std::filesystem::path& path);

/// A maneuver tag: "Z<delta>/<psi>", "T<delta>", "R<i>" or "B<i>" (scripted).
struct ManeuverSpec {
  enum class Kind { kZigzag, kTurning, kRandom, kScripted } kind = Kind::kZigzag;
  std::string label;
  double delta = 0.0;  // rad
  double psi = 0.0;    // rad
  int index = 0;

  static ManeuverSpec parse(const std::string& tag);
};

/// Stable per-label seed, independent of list order.
std::uint64_t maneuver_seed(std::uint64_t base, const std::string& label);

/// Generate one observed record (simulate, resample to dt_obs, pollute).
/// Scripted maneuvers load `<script_dir>/<label>.csv`.
TrajectoryRecord generate_maneuver(const ManeuverSpec& spec, const GenConfig& cfg, std::uint64_t base_seed,
                                   const std::filesystem::path& script_dir);

struct DatasetFiles {
  std::string label;
  std::string file;        // observed CSV, relative to the dataset dir
  std::string truth_file;  // clean CSV, relative to the dataset dir
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  std::string generator;
  std::uint64_t seed = 0;
  double dt_sim = 0.1;
  double dt_obs = 1.0;
  std::map<std::string, std::vector<DatasetFiles>> splits;

  void save(const std::filesystem::path& dir) const;
  static DatasetManifest load(const std::filesystem::path& dir);
};

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kGeneratorVersion = "shipens-gen 1";

/// Load every record of one split (with truth when present).
Dataset load_split(const std::filesystem::path& dir, const std::string& split);

}  // namespace shipens
