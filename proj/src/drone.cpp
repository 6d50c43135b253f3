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
#include "intrinsic/drone.hpp"

#include <cmath>
#include <numbers>

namespace intrinsic::sim {

DroneState drone_step(const DroneState& state, const DroneInput& input, double tau) {
  DroneState next;
  next.x = state.x + tau * input.v * std::cos(state.mu);
  next.y = state.y + tau * input.v * std::sin(state.mu);
  next.mu = state.mu + tau * input.omega;
  next.z = state.z + tau * input.s;
  return next;
}

double wrap_angle(double angle) {
  const double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

data::SignalLayout drone_layout() {
  return data::SignalLayout::make({"x", "y", "z", "v", "omega", "s"}, {3, 4, 5}, {"m", "m", "m", "m/s", "rad/s", "m/s"});
}

}  // namespace intrinsic::sim
