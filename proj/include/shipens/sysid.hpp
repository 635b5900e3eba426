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

// Learned maneuvering model, initial-state estimator, rollout likelihood and
// ensemble training.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "shipens/core.hpp"
#include "shipens/dataset.hpp"
#include "shipens/fnn.hpp"
#include "shipens/integrate.hpp"

namespace shipens {

/// Precision weights 1/sigma^2 per state channel (x0, y0, psi, u, vm, r).
struct LikelihoodWeights {
  std::array<double, 6> w{0.0, 0.0, 0.0, 1.0, 1.0, 1.0};

  /// Infinite sigma gives weight 0.
  static LikelihoodWeights from_sigma(const std::array<double, 6>& sigma);
  void validate() const;
};

struct DynamicsModel {
  NetParams net;  // 8 -> 3
  StandardizationStats stats;
  Vec3 norm_mean = Vec3::Zero();
  Vec3 norm_std = Vec3::Ones();
};

/// (du, dvm, dr) from the standardized network.
Vec3 model_accel(const DynamicsModel& model, const ShipState& state, const ActuatorState& act, const TrueWind& wind);

/// Mean and std of raw outputs over `samples` standard-normal inputs.
/// Throws InvalidArgument when any channel std is below 1e-12.
std::pair<Vec3, Vec3> calibrate_output_norm(const NetParams& net, Rng& rng, int samples = 10000);

struct InitStateNet {
  NetParams net;  // 6 * k_init -> 6
  int k_init = 30;
  bool enabled = true;
  Eigen::VectorXd enc_mean;  // standardization of the relative encoding
  Eigen::VectorXd enc_std;
  Vec6 out_scale = Vec6::Ones();  // per-channel scale of the net output
};

/// Relative encoding of the first k_init observations: position residuals
/// rotated into the body frame at t0, wrapped heading residual, raw velocities.
Eigen::VectorXd encode_init_window(const TrajectoryRecord& window, int k_init);

/// Per-entry mean and std of encode_init_window over the given windows.
/// Entries with std below 1e-12 get std 1.
std::pair<Eigen::VectorXd, Eigen::VectorXd> encoding_stats(const std::vector<Window>& windows, int k_init);

/// y(t0) + out_scale * phi'(encoding); returns y(t0) when the net is disabled.
ShipState estimate_initial_state(const InitStateNet& init, const TrajectoryRecord& window);

/// One fixed step of the learned state derivative under zero-order hold.
ShipState model_step(const DynamicsModel& model, const ShipState& x, const ActuatorState& act, const TrueWind& wind,
                     double dt, Integrator scheme);

/// Batched model_step: x is 6 x B, act 3 x B, winds 1 x B.
Eigen::MatrixXd model_step_batch(const DynamicsModel& model, const Eigen::MatrixXd& x, const Eigen::Matrix3Xd& act,
                                 const Eigen::RowVectorXd& wind_speed, const Eigen::RowVectorXd& wind_dir, double dt,
                                 Integrator scheme);

/// States at every window time starting from x0. Throws DivergedError.
std::vector<ShipState> rollout(const DynamicsModel& model, const ShipState& x0, const TrajectoryRecord& window,
                               Integrator scheme);

struct Member {
  DynamicsModel dyn;
  InitStateNet init;
  std::uint64_t seed = 0;
  std::vector<double> loss_history;  // per-epoch mean normalized loss
};

struct LossResult {
  double loss = 0.0;            // sum over windows and steps of weighted squared residuals
  Eigen::VectorXd grad_dyn;     // d loss / d theta
  Eigen::VectorXd grad_init;    // d loss / d theta' (empty when the init net is disabled)
  std::size_t samples = 0;      // windows x steps
};

/// Weighted squared residuals over k = 0..K-1 of equal-length windows, with
/// gradients by reverse mode through the full rollout and the initial-state
/// estimate. The psi residual is wrapped. Throws DivergedError.
LossResult nll_loss(const Member& member, const std::vector<const TrajectoryRecord*>& batch,
                    const LikelihoodWeights& weights, Integrator scheme, bool want_grad = true);

struct TrainConfig {
  int k = 100;
  int k_init = 30;
  int stride = 100;  // window stride in the training records
  int hidden_layers = 3;
  int width = 256;
  int init_hidden_layers = 3;
  int init_width = 256;
  double lr = 1e-4;
  int batch = 32;
  int epochs = 20000;
  Integrator integrator = Integrator::kEuler;
  double clip_norm = 10.0;  // <= 0 disables clipping
  bool use_init_net = true;
  int calib_samples = 10000;
  int max_failed_batches = 50;  // consecutive diverged batches before giving up
  std::array<double, 6> sigma{NoiseConfig::kInf, NoiseConfig::kInf, NoiseConfig::kInf, 0.01, 0.01, deg2rad(0.1)};

  void validate() const;
  LikelihoodWeights weights() const { return LikelihoodWeights::from_sigma(sigma); }
};

/// Shared preprocessing for all members.
struct TrainingData {
  std::vector<Window> windows;
  StandardizationStats stats;
  Eigen::VectorXd enc_mean;
  Eigen::VectorXd enc_std;
};

TrainingData prepare_training(const Dataset& train, const TrainConfig& cfg);

/// Fresh member: random dynamics net with frozen output normalization and an
/// initial-state net whose output layer starts at zero. The initial-state
/// output is scaled by the likelihood sigma (0 for unweighted channels).
Member init_member(const TrainingData& data, const TrainConfig& cfg, std::uint64_t seed);

using EpochCallback = std::function<void(std::size_t member, int epoch, double loss)>;

Member train_member(const TrainingData& data, const TrainConfig& cfg, std::uint64_t seed, std::size_t index = 0,
                    const EpochCallback& on_epoch = {});

struct EnsembleModel {
  std::vector<Member> members;
  TrainConfig config;
  std::uint64_t base_seed = 0;

  std::size_t size() const { return members.size(); }
  /// Members [0, m).
  EnsembleModel prefix(std::size_t m) const;

  void save(const std::filesystem::path& dir) const;
  static EnsembleModel load(const std::filesystem::path& dir);
};

inline constexpr const char* kEnsembleFormat = "shipens-ensemble 1";

std::uint64_t member_seed(std::uint64_t base_seed, std::size_t index);

EnsembleModel train_ensemble(const TrainingData& data, const TrainConfig& cfg, std::size_t m, std::uint64_t base_seed,
                             std::size_t jobs = 0, const EpochCallback& on_epoch = {});

/// Mean over windows and steps of the weighted squared error between the
/// clean states (observations when no truth is stored) and the rollout from
/// the estimated initial state.
double fitting_metric(const Member& member, const std::vector<Window>& windows, const LikelihoodWeights& weights,
                      Integrator scheme);

}  // namespace shipens
