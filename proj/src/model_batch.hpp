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

// Internal: batched state derivative of the learned model and its
// vector-Jacobian products. Columns are independent trajectories.

#pragma once

#include <array>

#include "shipens/sysid.hpp"

namespace shipens::detail {

struct StepInputs {
  Eigen::Matrix3Xd act;
  Eigen::RowVectorXd ws;  // true wind speed
  Eigen::RowVectorXd wd;  // true wind direction
  Eigen::RowVectorXd dt;
};

struct DerivEval {
  Tape tape;
  Eigen::MatrixXd x;    // 6 x B evaluation point
  Eigen::Matrix2Xd wt;  // body-frame true wind at x
};

struct StepRecord {
  std::array<DerivEval, 4> stage;
  int stages = 0;
};

/// Rows: pose rate (3) then learned acceleration (3).
Eigen::MatrixXd eval_deriv(const DynamicsModel& m, const Eigen::MatrixXd& x, const StepInputs& in, DerivEval* rec);

/// J^T lam at the recorded point; accumulates d<lam, g>/d theta into grad.
Eigen::MatrixXd vjp_deriv(const DynamicsModel& m, const DerivEval& rec, const Eigen::MatrixXd& lam,
                          Eigen::VectorXd& grad);

Eigen::MatrixXd step_batch(const DynamicsModel& m, const Eigen::MatrixXd& x, const StepInputs& in, Integrator scheme,
                           StepRecord* rec);

/// Adjoint of step_batch: maps d/dx_{k+1} to d/dx_k.
Eigen::MatrixXd step_vjp(const DynamicsModel& m, const StepRecord& rec, const StepInputs& in,
                         const Eigen::MatrixXd& lam_next, Eigen::VectorXd& grad);

}  // namespace shipens::detail
