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

// Feedforward tanh network with tape-based reverse mode and Adam.

#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "shipens/rng.hpp"

namespace shipens {

enum class Activation { kTanh };

/// in -> [width] x hidden_layers -> out. Hidden layers use the activation;
/// the final affine layer is linear.
struct NetShape {
  int in = 1;
  int hidden_layers = 1;
  int width = 1;
  int out = 1;
  Activation activation = Activation::kTanh;

  void validate() const;
  int layer_count() const { return hidden_layers + 1; }
  int fan_in(int layer) const { return layer == 0 ? in : width; }
  int fan_out(int layer) const { return layer == hidden_layers ? out : width; }
  std::size_t param_count() const;
  bool operator==(const NetShape&) const = default;
};

/// Flat parameter vector. Layer l occupies W_l (fan_out x fan_in, column
/// major) followed by b_l (fan_out), layers in order.
struct NetParams {
  NetShape shape;
  Eigen::VectorXd theta;

  NetParams() = default;
  explicit NetParams(const NetShape& s);

  std::size_t weight_offset(int layer) const;
  std::size_t bias_offset(int layer) const;
  Eigen::Map<const Eigen::MatrixXd> W(int layer) const;
  Eigen::Map<const Eigen::VectorXd> b(int layer) const;
  Eigen::Map<Eigen::MatrixXd> W(int layer);
  Eigen::Map<Eigen::VectorXd> b(int layer);
};

/// Layer inputs saved by forward; columns are batch samples.
struct Tape {
  NetShape shape;
  std::vector<Eigen::MatrixXd> a;  // a[0] = input, a[l] = output of hidden layer l
  Eigen::Index batch() const { return a.empty() ? 0 : a[0].cols(); }
};

/// Batched forward pass. X is in x B; returns out x B.
Eigen::MatrixXd forward(const NetParams& p, const Eigen::MatrixXd& x, Tape* tape = nullptr);

/// Reverse pass for upstream gradient G (out x B). Adds d<G, y>/d theta to
/// grad (resized and zeroed when empty) and returns d<G, y>/dX (in x B).
Eigen::MatrixXd backward(const NetParams& p, const Tape& tape, const Eigen::MatrixXd& g, Eigen::VectorXd& grad);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every W and b.
NetParams init_params(const NetShape& shape, Rng& rng);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t n, double learning_rate);
};

/// Bias-corrected Adam update. Throws Error(kTraining) on a non-finite gradient.
void adam_step(AdamState& state, Eigen::VectorXd& theta, const Eigen::VectorXd& grad);

/// Text checkpoint:
///   shipens-net v1
///   shape <in> <hidden_layers> <width> <out> tanh
///   count <n>
///   <n lines, one %.17g value each, in theta order>
void save_params(const std::filesystem::path& path, const NetParams& p);
NetParams load_params(const std::filesystem::path& path);

}  // namespace shipens
