/*
 Copyright 2026 The Intrinsic Control Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#pragma once

#include "intrinsic/behavior_data.hpp"

namespace intrinsic::sim {

inline constexpr double kDroneTau = 0.1;  // s

// Position in meters and yaw in radians. Yaw is kept unwrapped.
struct DroneState {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double mu = 0.0;
};

// Forward velocity (m/s), yaw rate (rad/s), vertical velocity (m/s).
struct DroneInput {
  double v = 0.0;
  double omega = 0.0;
  double s = 0.0;
};

// Unicycle in the plane plus an integrator in altitude:
//   x+ = x + tau v cos(mu),  y+ = y + tau v sin(mu),
//   mu+ = mu + tau omega,    z+ = z + tau s.
DroneState drone_step(const DroneState& state, const DroneInput& input, double tau = kDroneTau);

// Maps an angle to (-pi, pi] for reporting.
double wrap_angle(double angle);

// w = (x, y, z, v, omega, s); outputs first, inputs at indices 3..5.
data::SignalLayout drone_layout();

}  // namespace intrinsic::sim
