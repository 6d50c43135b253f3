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

#include <functional>
#include <utility>
#include <vector>

#include "intrinsic/common.hpp"

namespace intrinsic::nn {

// Elementwise tanh through the vectorized exp, as sign(x) (1 - 2 / (e^{2|x|} + 1)).
// Absolute error stays at the rounding level, the result is exactly odd and
// tanh(0) = 0. Eigen's own double tanh is scalar and dominates network cost.
Matrix tanh_elementwise(const Matrix& x);

// Reverse-mode tape over batch-major matrices (one sample per row).
//
// Nodes are appended in evaluation order, so replaying them backwards is a
// valid topological order. Parameter leaves read a row-major block of a flat
// parameter vector and scatter their gradient back into the same layout.
class Tape {
 public:
  struct Var {
    int id = -1;
  };

  Tape() = default;
  explicit Tape(const Vector& params);
  // Backward closures hold `this`.
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var param(Eigen::Index offset, Eigen::Index rows, Eigen::Index cols);

  // x W^T + 1 b with x: n x in, W: out x in, b: 1 x out.
  Var affine(Var x, Var W, Var b);
  Var tanh(Var x);
  Var sigmoid(Var x);
  Var relu(Var x);  // max{x, 0}, derivative 0 at 0
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);  // elementwise
  Var scale(Var x, double c);
  Var add_scalar(Var x, double c);
  Var cols(Var x, Eigen::Index start, Eigen::Index count);
  Var rows(Var x, Eigen::Index start, Eigen::Index count);
  Var concat_rows(const std::vector<Var>& parts);
  Var row_sq_norm(Var x);  // n x 1
  Var sum(Var x);          // 1 x 1
  Var mean(Var x);
  Var mean_square(Var x);
  Var mean_abs(Var x);
  Var max_abs(Var x);  // gradient flows to the first maximizing entry

  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  double scalar(Var v) const;

  // Seeds d(root) = 1; root must be 1 x 1. Parameter gradients land in param_grad().
  void backward(Var root);
  const Vector& param_grad() const { return param_grad_; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  Var push(Matrix value, bool requires_grad);
  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
  // Gradient buffer of v, zero-initialized on first use.
  Matrix& grad_of(Var v);
  bool needs(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }

  std::vector<Node> nodes_;
  const Vector* params_ = nullptr;
  Vector param_grad_;
};

using LossFn = std::function<Tape::Var(Tape&)>;

struct ValueAndGrad {
  double value = 0.0;
  Vector grad;
};

// Exact gradient of the scalar built by loss_fn. Throws NumericalError on a
// non-finite loss.
ValueAndGrad grad(const LossFn& loss_fn, const Vector& params);

}  // namespace intrinsic::nn
