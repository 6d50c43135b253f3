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
#include "intrinsic/dense_net.hpp"

#include <cmath>

namespace intrinsic::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kTanh: return "tanh";
  }
  return "unknown";
}

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  throw ValidationError("unknown activation '" + s + "'");
}

Eigen::Index param_count(const std::vector<int>& layer_dims) {
  Eigen::Index n = 0;
  for (std::size_t i = 0; i + 1 < layer_dims.size(); ++i) {
    n += static_cast<Eigen::Index>(layer_dims[i] + 1) * layer_dims[i + 1];
  }
  return n;
}

DenseNet::DenseNet(std::vector<int> layer_dims, Eigen::Index offset, Activation activation)
    : dims_(std::move(layer_dims)), offset_(offset), activation_(activation) {
  require(dims_.size() >= 2, "DenseNet: need at least an input and an output dimension");
  for (int d : dims_) require(d > 0, "DenseNet: layer dimensions must be positive");
  Eigen::Index at = offset_;
  for (int l = 0; l < layer_count(); ++l) {
    layer_offsets_.push_back(at);
    at += static_cast<Eigen::Index>(dims_[l] + 1) * dims_[l + 1];
  }
  count_ = at - offset_;
}

Eigen::Index DenseNet::bias_offset(int layer) const {
  return weight_offset(layer) + static_cast<Eigen::Index>(dims_[layer]) * dims_[layer + 1];
}

void DenseNet::init_xavier(Vector& params, std::mt19937_64& rng) const {
  require_dims(params.size() >= end(), "init_xavier: parameter vector too short");
  for (int l = 0; l < layer_count(); ++l) {
    const int fan_in = dims_[l];
    const int fan_out = dims_[l + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    const Eigen::Index w0 = weight_offset(l);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(fan_in) * fan_out; ++i) params(w0 + i) = dist(rng);
    params.segment(bias_offset(l), fan_out).setZero();
  }
}

Matrix DenseNet::forward_batch(const Vector& params, const Matrix& X) const {
  require_dims(X.cols() == input_dim(), "DenseNet: input width mismatch");
  require_dims(params.size() >= end(), "DenseNet: parameter vector too short");
  Matrix h = X;
  for (int l = 0; l < layer_count(); ++l) {
    const Eigen::Map<const RowMatrix> W(params.data() + weight_offset(l), dims_[l + 1], dims_[l]);
    const Eigen::Map<const Eigen::RowVectorXd> b(params.data() + bias_offset(l), dims_[l + 1]);
    Matrix next = h * W.transpose();
    next.rowwise() += b;
    if (l + 1 < layer_count()) next = tanh_elementwise(next);
    h = std::move(next);
  }
  return h;
}

Vector DenseNet::forward(const Vector& params, const Vector& x) const {
  return forward_batch(params, x.transpose()).row(0).transpose();
}

DenseNet::Bound DenseNet::bind(Tape& tape) const {
  Bound bound;
  for (int l = 0; l < layer_count(); ++l) {
    bound.W.push_back(tape.param(weight_offset(l), dims_[l + 1], dims_[l]));
    bound.b.push_back(tape.param(bias_offset(l), 1, dims_[l + 1]));
  }
  return bound;
}

Tape::Var DenseNet::forward(Tape& tape, const Bound& bound, Tape::Var X) const {
  Tape::Var h = X;
  for (int l = 0; l < layer_count(); ++l) {
    h = tape.affine(h, bound.W[static_cast<std::size_t>(l)], bound.b[static_cast<std::size_t>(l)]);
    if (l + 1 < layer_count()) h = tape.tanh(h);
  }
  return h;
}

Vector pack_params(const std::vector<LayerParams>& layers) {
  Eigen::Index n = 0;
  for (const auto& lp : layers) n += lp.W.size() + lp.b.size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const auto& lp : layers) {
    require_dims(lp.b.size() == lp.W.rows(), "pack_params: bias size mismatch");
    Eigen::Map<RowMatrix>(out.data() + at, lp.W.rows(), lp.W.cols()) = lp.W;
    at += lp.W.size();
    out.segment(at, lp.b.size()) = lp.b;
    at += lp.b.size();
  }
  return out;
}

std::vector<LayerParams> unpack_params(const DenseNet& net, const Vector& params) {
  require_dims(params.size() >= net.end(), "unpack_params: parameter vector too short");
  std::vector<LayerParams> layers;
  const auto& d = net.layer_dims();
  for (int l = 0; l < net.layer_count(); ++l) {
    LayerParams lp;
    lp.W = Eigen::Map<const RowMatrix>(params.data() + net.weight_offset(l), d[l + 1], d[l]);
    lp.b = params.segment(net.bias_offset(l), d[l + 1]);
    layers.push_back(std::move(lp));
  }
  return layers;
}

}  // namespace intrinsic::nn
