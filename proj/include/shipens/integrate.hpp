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

#pragma once

#include <string>
#include <string_view>

namespace shipens {

/// Fixed-step explicit integrators. Inputs are held constant over a step.
enum class Integrator { kEuler, kRk4 };

Integrator parse_integrator(std::string_view name);
std::string to_string(Integrator integrator);

template <class State, class Deriv>
State euler_step(const State& x, double dt, Deriv&& f) {
  return x + dt * f(x);
}

template <class State, class Deriv>
State rk4_step(const State& x, double dt, Deriv&& f) {
  const State k1 = f(x);
  const State k2 = f(State(x + 0.5 * dt * k1));
  const State k3 = f(State(x + 0.5 * dt * k2));
  const State k4 = f(State(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

template <class State, class Deriv>
State integrate_step(Integrator scheme, const State& x, double dt, Deriv&& f) {
  return scheme == Integrator::kEuler ? euler_step(x, dt, f) : rk4_step(x, dt, f);
}

}  // namespace shipens
