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

#include "intrinsic/dense_net.hpp"

namespace intrinsic::nn {

// V(g) = a |g|^2 + (b - a) |g|^2 S(phi(g)), S the logistic sigmoid. The
// sigmoid's open range keeps V strictly between a|g|^2 and b|g|^2, and V(0) = 0
// for any phi.
struct LyapunovHead {
  double a = 0.01;
  double b = 100.0;
  DenseNet phi;  // g_dim -> 1

  void validate() const;

  // One value per row of G.
  Vector forward_batch(const Vector& params, const Matrix& G) const;
  double forward(const Vector& params, const Vector& g) const;

  // n x 1 column of V values.
  Tape::Var forward(Tape& tape, const DenseNet::Bound& bound, Tape::Var G) const;
};

}  // namespace intrinsic::nn
