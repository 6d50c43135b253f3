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
#include "intrinsic/autodiff.hpp"

#include <cmath>
#include <string>

namespace intrinsic::nn {

Matrix tanh_elementwise(const Matrix& x) {
  Matrix y = (1.0 - 2.0 / ((2.0 * x.array().abs()).exp() + 1.0)).matrix();
  // Plain loop: Eigen's sign() and select() do not vectorize for double.
  double* out = y.data();
  const double* in = x.data();
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = std::copysign(out[i], in[i]);
  return y;
}

Tape::Tape(const Vector& params) : params_(&params), param_grad_(Vector::Zero(params.size())) {}

Tape::Var Tape::push(Matrix value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, {}});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Matrix& Tape::grad_of(Var v) {
  Node& n = node(v);
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

double Tape::scalar(Var v) const {
  const Matrix& m = value(v);
  require_dims(m.size() == 1, "tape: value is not a scalar");
  return m(0, 0);
}

Tape::Var Tape::constant(Matrix value) { return push(std::move(value), false); }

Tape::Var Tape::param(Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
  require(params_ != nullptr, "tape: no parameter vector bound");
  require_dims(offset >= 0 && offset + rows * cols <= params_->size(), "tape: parameter block out of range");
  Matrix value = Eigen::Map<const RowMatrix>(params_->data() + offset, rows, cols);
  Var v = push(std::move(value), true);
  node(v).backward = [this, v, offset, rows, cols] {
    const Matrix& g = node(v).grad;
    Eigen::Map<RowMatrix>(param_grad_.data() + offset, rows, cols) += g;
  };
  return v;
}

Tape::Var Tape::affine(Var x, Var W, Var b) {
  require_dims(value(x).cols() == value(W).cols(), "affine: input width does not match weights");
  require_dims(value(b).rows() == 1 && value(b).cols() == value(W).rows(), "affine: bias shape");
  Matrix out = value(x) * value(W).transpose();
  out.rowwise() += value(b).row(0);
  Var y = push(std::move(out), needs(x) || needs(W) || needs(b));
  node(y).backward = [this, x, W, b, y] {
    const Matrix& gy = node(y).grad;
    if (needs(x)) grad_of(x).noalias() += gy * value(W);
    if (needs(W)) grad_of(W).noalias() += gy.transpose() * value(x);
    if (needs(b)) grad_of(b) += gy.colwise().sum();
  };
  return y;
}

Tape::Var Tape::tanh(Var x) {
  Var y = push(tanh_elementwise(value(x)), needs(x));
  node(y).backward = [this, x, y] {
    const Matrix& t = value(y);
    grad_of(x).array() += node(y).grad.array() * (1.0 - t.array().square());
  };
  return y;
}

Tape::Var Tape::sigmoid(Var x) {
  Var y = push((1.0 / (1.0 + (-value(x).array()).exp())).matrix(), needs(x));
  node(y).backward = [this, x, y] {
    const Matrix& s = value(y);
    grad_of(x).array() += node(y).grad.array() * s.array() * (1.0 - s.array());
  };
  return y;
}

Tape::Var Tape::relu(Var x) {
  Var y = push(value(x).cwiseMax(0.0), needs(x));
  node(y).backward = [this, x, y] {
    grad_of(x).array() += (value(x).array() > 0.0).select(node(y).grad.array(), 0.0);
  };
  return y;
}

Tape::Var Tape::add(Var a, Var b) {
  require_dims(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "add: shape mismatch");
  Var y = push(value(a) + value(b), needs(a) || needs(b));
  node(y).backward = [this, a, b, y] {
    if (needs(a)) grad_of(a) += node(y).grad;
    if (needs(b)) grad_of(b) += node(y).grad;
  };
  return y;
}

Tape::Var Tape::sub(Var a, Var b) {
  require_dims(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "sub: shape mismatch");
  Var y = push(value(a) - value(b), needs(a) || needs(b));
  node(y).backward = [this, a, b, y] {
    if (needs(a)) grad_of(a) += node(y).grad;
    if (needs(b)) grad_of(b) -= node(y).grad;
  };
  return y;
}

Tape::Var Tape::mul(Var a, Var b) {
  require_dims(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(), "mul: shape mismatch");
  Var y = push(value(a).cwiseProduct(value(b)), needs(a) || needs(b));
  node(y).backward = [this, a, b, y] {
    if (needs(a)) grad_of(a) += node(y).grad.cwiseProduct(value(b));
    if (needs(b)) grad_of(b) += node(y).grad.cwiseProduct(value(a));
  };
  return y;
}

Tape::Var Tape::scale(Var x, double c) {
  Var y = push(c * value(x), needs(x));
  node(y).backward = [this, x, y, c] { grad_of(x) += c * node(y).grad; };
  return y;
}

Tape::Var Tape::add_scalar(Var x, double c) {
  Var y = push((value(x).array() + c).matrix(), needs(x));
  node(y).backward = [this, x, y] { grad_of(x) += node(y).grad; };
  return y;
}

Tape::Var Tape::cols(Var x, Eigen::Index start, Eigen::Index count) {
  require_dims(start >= 0 && start + count <= value(x).cols(), "cols: range out of bounds");
  Var y = push(value(x).middleCols(start, count), needs(x));
  node(y).backward = [this, x, y, start, count] { grad_of(x).middleCols(start, count) += node(y).grad; };
  return y;
}

Tape::Var Tape::rows(Var x, Eigen::Index start, Eigen::Index count) {
  require_dims(start >= 0 && start + count <= value(x).rows(), "rows: range out of bounds");
  Var y = push(value(x).middleRows(start, count), needs(x));
  node(y).backward = [this, x, y, start, count] { grad_of(x).middleRows(start, count) += node(y).grad; };
  return y;
}

Tape::Var Tape::concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: no inputs");
  const auto cols = value(parts.front()).cols();
  Eigen::Index total = 0;
  bool any = false;
  for (Var p : parts) {
    require_dims(value(p).cols() == cols, "concat_rows: column count mismatch");
    total += value(p).rows();
    any = any || needs(p);
  }
  Matrix out(total, cols);
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleRows(at, value(p).rows()) = value(p);
    at += value(p).rows();
  }
  Var y = push(std::move(out), any);
  node(y).backward = [this, parts, y] {
    Eigen::Index at = 0;
    for (Var p : parts) {
      const auto n = value(p).rows();
      if (needs(p)) grad_of(p) += node(y).grad.middleRows(at, n);
      at += n;
    }
  };
  return y;
}

Tape::Var Tape::row_sq_norm(Var x) {
  Var y = push(value(x).rowwise().squaredNorm(), needs(x));
  node(y).backward = [this, x, y] {
    grad_of(x) += 2.0 * (value(x).array().colwise() * node(y).grad.col(0).array()).matrix();
  };
  return y;
}

Tape::Var Tape::sum(Var x) {
  Matrix out(1, 1);
  out(0, 0) = value(x).sum();
  Var y = push(std::move(out), needs(x));
  node(y).backward = [this, x, y] { grad_of(x).array() += node(y).grad(0, 0); };
  return y;
}

Tape::Var Tape::mean(Var x) {
  const auto n = static_cast<double>(value(x).size());
  require(n > 0, "mean: empty input");
  Matrix out(1, 1);
  out(0, 0) = value(x).sum() / n;
  Var y = push(std::move(out), needs(x));
  node(y).backward = [this, x, y, n] { grad_of(x).array() += node(y).grad(0, 0) / n; };
  return y;
}

Tape::Var Tape::mean_square(Var x) {
  const auto n = static_cast<double>(value(x).size());
  require(n > 0, "mean_square: empty input");
  Matrix out(1, 1);
  out(0, 0) = value(x).squaredNorm() / n;
  Var y = push(std::move(out), needs(x));
  node(y).backward = [this, x, y, n] { grad_of(x) += (2.0 * node(y).grad(0, 0) / n) * value(x); };
  return y;
}

Tape::Var Tape::mean_abs(Var x) {
  const auto n = static_cast<double>(value(x).size());
  require(n > 0, "mean_abs: empty input");
  Matrix out(1, 1);
  out(0, 0) = value(x).cwiseAbs().sum() / n;
  Var y = push(std::move(out), needs(x));
  node(y).backward = [this, x, y, n] {
    grad_of(x).array() += (node(y).grad(0, 0) / n) * value(x).array().sign();
  };
  return y;
}

Tape::Var Tape::max_abs(Var x) {
  require(value(x).size() > 0, "max_abs: empty input");
  Eigen::Index r = 0, c = 0;
  const double m = value(x).cwiseAbs().maxCoeff(&r, &c);
  Matrix out(1, 1);
  out(0, 0) = m;
  Var y = push(std::move(out), needs(x));
  node(y).backward = [this, x, y, r, c] {
    const double v = value(x)(r, c);
    grad_of(x)(r, c) += node(y).grad(0, 0) * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
  };
  return y;
}

void Tape::backward(Var root) {
  require_dims(value(root).size() == 1, "backward: root must be a scalar");
  grad_of(root).setConstant(1.0);
  for (int id = root.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
    n.backward();
  }
}

ValueAndGrad grad(const LossFn& loss_fn, const Vector& params) {
  Tape tape(params);
  const Tape::Var loss = loss_fn(tape);
  ValueAndGrad out;
  out.value = tape.scalar(loss);
  if (!std::isfinite(out.value)) {
    throw NumericalError("grad: non-finite loss value " + std::to_string(out.value));
  }
  tape.backward(loss);
  out.grad = tape.param_grad();
  return out;
}

}  // namespace intrinsic::nn
