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

#include "intrinsic/common.hpp"

namespace intrinsic::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vector m;
  Vector v;
  long step = 0;

  static AdamState zeros(Eigen::Index n) { return AdamState{Vector::Zero(n), Vector::Zero(n), 0}; }
};

// Bias-corrected first/second moment update, in place.
void adam_step(Vector& params, const Vector& grad, AdamState& state, const AdamConfig& cfg);

}  // namespace intrinsic::nn
