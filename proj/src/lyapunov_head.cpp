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
#include "intrinsic/lyapunov_head.hpp"

namespace intrinsic::nn {

void LyapunovHead::validate() const {
  require(a > 0.0 && a < b, "LyapunovHead: need 0 < a < b");
  require(phi.output_dim() == 1, "LyapunovHead: phi must be scalar-valued");
}

Vector LyapunovHead::forward_batch(const Vector& params, const Matrix& G) const {
  const Vector sq = G.rowwise().squaredNorm();
  const Vector s = (1.0 / (1.0 + (-phi.forward_batch(params, G).col(0).array()).exp())).matrix();
  return (sq.array() * (a + (b - a) * s.array())).matrix();
}

double LyapunovHead::forward(const Vector& params, const Vector& g) const {
  return forward_batch(params, g.transpose())(0);
}

Tape::Var LyapunovHead::forward(Tape& tape, const DenseNet::Bound& bound, Tape::Var G) const {
  const Tape::Var sq = tape.row_sq_norm(G);
  const Tape::Var s = tape.sigmoid(phi.forward(tape, bound, G));
  return tape.mul(sq, tape.add_scalar(tape.scale(s, b - a), a));
}

}  // namespace intrinsic::nn
