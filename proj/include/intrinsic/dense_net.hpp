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

#include <random>
#include <string>
#include <vector>

#include "intrinsic/autodiff.hpp"

namespace intrinsic::nn {

enum class Activation { kTanh };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Fully connected network whose parameters live in a slice of a shared flat
// vector starting at `offset`. Per layer the slice holds W (out x in,
// row-major) followed by b (out). Hidden layers use the activation; the last
// layer is affine.
class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(std::vector<int> layer_dims, Eigen::Index offset, Activation activation = Activation::kTanh);

  const std::vector<int>& layer_dims() const { return dims_; }
  int input_dim() const { return dims_.front(); }
  int output_dim() const { return dims_.back(); }
  int layer_count() const { return static_cast<int>(dims_.size()) - 1; }
  Eigen::Index offset() const { return offset_; }
  Eigen::Index param_count() const { return count_; }
  Eigen::Index end() const { return offset_ + count_; }
  Activation activation() const { return activation_; }

  Eigen::Index weight_offset(int layer) const { return layer_offsets_[static_cast<std::size_t>(layer)]; }
  Eigen::Index bias_offset(int layer) const;

  // Xavier-uniform weights, zero biases.
  void init_xavier(Vector& params, std::mt19937_64& rng) const;

  Matrix forward_batch(const Vector& params, const Matrix& X) const;
  Vector forward(const Vector& params, const Vector& x) const;

  struct Bound {
    std::vector<Tape::Var> W;
    std::vector<Tape::Var> b;
  };
  // Registers the parameter leaves once per tape; reuse for every call.
  Bound bind(Tape& tape) const;
  Tape::Var forward(Tape& tape, const Bound& bound, Tape::Var X) const;

 private:
  std::vector<int> dims_;
  std::vector<Eigen::Index> layer_offsets_;
  Eigen::Index offset_ = 0;
  Eigen::Index count_ = 0;
  Activation activation_ = Activation::kTanh;
};

// Sum over layers of (d_i + 1) d_{i+1}.
Eigen::Index param_count(const std::vector<int>& layer_dims);

// Canonical flattening of per-layer (W, b) pairs.
struct LayerParams {
  Matrix W;
  Vector b;
};
Vector pack_params(const std::vector<LayerParams>& layers);
std::vector<LayerParams> unpack_params(const DenseNet& net, const Vector& params);

}  // namespace intrinsic::nn
