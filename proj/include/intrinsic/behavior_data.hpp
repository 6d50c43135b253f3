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

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "intrinsic/common.hpp"

namespace intrinsic::data {

// Partition of one manifest sample w into inputs u and outputs y.
struct SignalLayout {
  int w_dim = 0;
  std::vector<int> input_indices;
  std::vector<int> output_indices;
  std::vector<std::string> names;
  std::vector<std::string> units;

  int u_dim() const { return static_cast<int>(input_indices.size()); }
  int y_dim() const { return static_cast<int>(output_indices.size()); }

  // Throws ValidationError unless inputs and outputs partition {0..w_dim-1}.
  void validate() const;

  bool same_partition(const SignalLayout& other) const {
    return w_dim == other.w_dim && input_indices == other.input_indices &&
           output_indices == other.output_indices;
  }

  static SignalLayout make(std::vector<std::string> names,
                           std::vector<int> input_indices,
                           std::vector<std::string> units = {});
};

using LayoutPtr = std::shared_ptr<const SignalLayout>;

// Samples w_0..w_T stored column-wise, so a window over consecutive steps is
// one contiguous block of memory in time-major order.
struct Trajectory {
  Matrix samples;  // w_dim x (T+1)
  LayoutPtr layout;
  double dt = 1.0;

  int T() const { return static_cast<int>(samples.cols()) - 1; }
  int w_dim() const { return static_cast<int>(samples.rows()); }
  Vector sample(int k) const { return samples.col(k); }
};

// Stacked segment w_{k-L}..w_k, slot k-L first.
struct Window {
  Vector data;
  int L = 0;
  LayoutPtr layout;

  int w_dim() const { return layout ? layout->w_dim : static_cast<int>(data.size()) / (L + 1); }
  auto slot(int i) const { return data.segment(static_cast<Eigen::Index>(i) * w_dim(), w_dim()); }
};

// Index maps for the past (first L slots), future (last L slots), final slot
// and final-slot inputs of a depth-L window.
class WindowSelectors {
 public:
  WindowSelectors() = default;
  WindowSelectors(int L, int w_dim, std::vector<int> input_indices);
  WindowSelectors(int L, const SignalLayout& layout)
      : WindowSelectors(L, layout.w_dim, layout.input_indices) {}

  int L() const { return L_; }
  int w_dim() const { return w_dim_; }
  int window_size() const { return (L_ + 1) * w_dim_; }
  int shift_size() const { return L_ * w_dim_; }
  int u_dim() const { return static_cast<int>(input_rows_.size()); }
  const std::vector<int>& input_rows() const { return input_rows_; }
  const std::vector<int>& input_indices() const { return input_indices_; }

  Vector past(const Vector& v) const { return v.head(shift_size()); }
  Vector future(const Vector& v) const { return v.tail(shift_size()); }
  Vector last(const Vector& v) const { return v.tail(w_dim_); }
  Vector inputs(const Vector& v) const;

  // Row selections applied to a matrix whose rows are window coordinates.
  Matrix past_rows(const Matrix& m) const { return m.topRows(shift_size()); }
  Matrix future_rows(const Matrix& m) const { return m.bottomRows(shift_size()); }
  Matrix last_rows(const Matrix& m) const { return m.bottomRows(w_dim_); }
  Matrix input_rows_of(const Matrix& m) const;

 private:
  int L_ = 0;
  int w_dim_ = 0;
  std::vector<int> input_indices_;
  std::vector<int> input_rows_;
};

// Affine per-component rescaling w -> (w - center) / scale, applied slot-wise
// to windows.
struct Normalizer {
  Vector center;
  Vector scale;

  int w_dim() const { return static_cast<int>(center.size()); }
  void validate() const;

  Vector normalize_sample(const Vector& w) const;
  Vector denormalize_sample(const Vector& w) const;
  Vector normalize_window(const Vector& v) const;
  Vector denormalize_window(const Vector& v) const;
  // Acts on the columns of a w_dim x n sample matrix.
  Matrix normalize_samples(const Matrix& samples) const;
  // Input components only, in layout input order.
  Vector denormalize_inputs(const Vector& u, const std::vector<int>& input_indices) const;

  static Normalizer identity(int w_dim);
};

struct TrajectoryDataset {
  LayoutPtr layout;
  double dt = 1.0;
  std::vector<Trajectory> trajectories;
  std::string split = "train";
  Vector setpoint;
  std::uint64_t seed = 0;
  nlohmann::json provenance = nlohmann::json::object();

  void validate() const;
  std::size_t window_count(int L) const;
};

struct RankReport {
  int numerical_rank = 0;
  int required = 0;
  bool satisfied = false;
  Vector singular_values;
};

inline constexpr double kDefaultRankTol = 1e-8;

Window make_window(const Trajectory& traj, int k, int L);

std::vector<std::pair<Window, Window>> sliding_pairs(const Trajectory& traj, int L);

// (L+1) w_dim x (T+1-L); column j is the window ending at step L+j.
Matrix build_hankel(const Trajectory& traj, int L);

// Column-wise concatenation of build_hankel over several trajectories.
Matrix build_mosaic_hankel(const std::vector<Trajectory>& trajs, int L);

// Numerical rank counts singular values above tol * sigma_max.
RankReport check_rank(const Matrix& H, int L, int u_dim, int n_B, double tol = kDefaultRankTol);

// Centers on the setpoint and scales by the per-component standard deviation.
// Components with std below 1e-12 get scale 1 and are listed in *degenerate.
Normalizer fit_normalizer(const TrajectoryDataset& ds, const Vector& setpoint,
                          std::vector<int>* degenerate = nullptr);

}  // namespace intrinsic::data
