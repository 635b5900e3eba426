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

// Run configuration and the end-to-end commands behind the CLI.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "shipens/ctrl_eval.hpp"
#include "shipens/predict.hpp"

namespace shipens {

struct RunPaths {
  std::filesystem::path dataset = "run/data";
  std::filesystem::path artifact = "run/ensemble";
  std::filesystem::path output = "run/out";
  std::filesystem::path scripts = "assets/berthing";
};

struct RunSeeds {
  std::uint64_t data = 2024;
  std::uint64_t train = 1;
  std::uint64_t predict = 2;
  std::uint64_t pdsweep = 3;
};

struct PredictSection {
  PredictOptions options;
  std::vector<SamplingScheme> schemes{SamplingScheme::kTSInf, SamplingScheme::kTS1};
  std::vector<std::size_t> member_prefixes;  // empty: full ensemble only
  std::vector<std::string> splits{"test_b", "test_zt", "test_r"};
  bool write_particles = false;
};

struct SweepSection {
  std::vector<double> kp;
  std::vector<double> kd;
  SweepOptions options;
  PDScenario scenario;
  bool write_members = true;
};

struct RunConfig {
  RunPaths paths;
  RunSeeds seeds;
  std::size_t jobs = 0;
  GenConfig gen;
  std::map<std::string, std::vector<std::string>> splits;  // split -> maneuver tags
  std::string train_split = "train";
  std::size_t ensemble_size = 15;
  TrainConfig train;
  PredictSection predict;
  SweepSection pdsweep;
  std::string json;  // effective configuration, pretty-printed
};

/// Effective configuration from built-in defaults, an optional JSON file and
/// `a.b.c=value` overrides. Unknown keys are rejected.
RunConfig load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides = {});
RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {});
std::string default_config_text();

using LogFn = std::function<void(const std::string&)>;

/// Each command writes its files and returns the run summary as JSON text
/// (also written next to the outputs, except for scripts). Summaries contain
/// no timing data.
std::string cmd_scripts(const RunConfig& cfg, const LogFn& log = {});
std::string cmd_gen(const RunConfig& cfg, const LogFn& log = {});
std::string cmd_train(const RunConfig& cfg, const LogFn& log = {});
std::string cmd_predict(const RunConfig& cfg, const LogFn& log = {});
std::string cmd_pdsweep(const RunConfig& cfg, const LogFn& log = {});

/// Dispatch by name: scripts, gen, train, predict, pdsweep.
std::string run_command(const std::string& name, const RunConfig& cfg, const LogFn& log = {});

inline constexpr const char* kPredictMetricsHeader =
    "split,scheme,members,l_eucl,l_maha,windows_ok,windows_failed,diverged_particles,degenerate_steps";

/// Spearman rank correlation with average ranks for ties; NaN when either
/// side is constant or shorter than two.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Maneuver tag to a file stem ("Z10/10" -> "Z10_10").
std::string label_stem(const std::string& label);

}  // namespace shipens
