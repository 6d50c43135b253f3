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
#include "intrinsic/behavior_data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace intrinsic::data {

void SignalLayout::validate() const {
  require(w_dim >= 0, "layout: negative w_dim");
  std::vector<int> seen(static_cast<std::size_t>(w_dim), 0);
  auto mark = [&](const std::vector<int>& idx, const char* which) {
    for (int i : idx) {
      require(i >= 0 && i < w_dim, std::string("layout: ") + which + " index out of range");
      require(seen[static_cast<std::size_t>(i)]++ == 0, "layout: duplicate component index");
    }
  };
  mark(input_indices, "input");
  mark(output_indices, "output");
  require(u_dim() + y_dim() == w_dim, "layout: inputs and outputs must cover every component");
  require(names.empty() || static_cast<int>(names.size()) == w_dim, "layout: names size");
  require(units.empty() || static_cast<int>(units.size()) == w_dim, "layout: units size");
}

SignalLayout SignalLayout::make(std::vector<std::string> names, std::vector<int> input_indices,
                                std::vector<std::string> units) {
  SignalLayout layout;
  layout.w_dim = static_cast<int>(names.size());
  layout.names = std::move(names);
  layout.units = std::move(units);
  layout.input_indices = std::move(input_indices);
  for (int i = 0; i < layout.w_dim; ++i) {
    if (std::find(layout.input_indices.begin(), layout.input_indices.end(), i) ==
        layout.input_indices.end()) {
      layout.output_indices.push_back(i);
    }
  }
  layout.validate();
  return layout;
}

WindowSelectors::WindowSelectors(int L, int w_dim, std::vector<int> input_indices)
    : L_(L), w_dim_(w_dim), input_indices_(std::move(input_indices)) {
  require(L >= 0, "selectors: negative window depth");
  input_rows_.reserve(input_indices_.size());
  for (int i : input_indices_) input_rows_.push_back(L_ * w_dim_ + i);
}

Vector WindowSelectors::inputs(const Vector& v) const {
  require_dims(v.size() == window_size(), "selectors: window length mismatch");
  Vector u(static_cast<Eigen::Index>(input_rows_.size()));
  for (std::size_t i = 0; i < input_rows_.size(); ++i) u(static_cast<Eigen::Index>(i)) = v(input_rows_[i]);
  return u;
}

Matrix WindowSelectors::input_rows_of(const Matrix& m) const {
  require_dims(m.rows() == window_size(), "selectors: row count mismatch");
  Matrix out(static_cast<Eigen::Index>(input_rows_.size()), m.cols());
  for (std::size_t i = 0; i < input_rows_.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(input_rows_[i]);
  return out;
}

void Normalizer::validate() const {
  require_dims(center.size() == scale.size(), "normalizer: center/scale size mismatch");
  require((scale.array() > 0.0).all(), "normalizer: scale must be strictly positive");
}

Vector Normalizer::normalize_sample(const Vector& w) const {
  require_dims(w.size() == center.size(), "normalizer: sample size mismatch");
  return ((w - center).array() / scale.array()).matrix();
}

Vector Normalizer::denormalize_sample(const Vector& w) const {
  require_dims(w.size() == center.size(), "normalizer: sample size mismatch");
  return (w.array() * scale.array()).matrix() + center;
}

Vector Normalizer::normalize_window(const Vector& v) const {
  const auto w = center.size();
  require_dims(w > 0 && v.size() % w == 0, "normalizer: window size mismatch");
  Vector out(v.size());
  for (Eigen::Index s = 0; s < v.size() / w; ++s) {
    out.segment(s * w, w) = ((v.segment(s * w, w) - center).array() / scale.array()).matrix();
  }
  return out;
}

Vector Normalizer::denormalize_window(const Vector& v) const {
  const auto w = center.size();
  require_dims(w > 0 && v.size() % w == 0, "normalizer: window size mismatch");
  Vector out(v.size());
  for (Eigen::Index s = 0; s < v.size() / w; ++s) {
    out.segment(s * w, w) = (v.segment(s * w, w).array() * scale.array()).matrix() + center;
  }
  return out;
}

Matrix Normalizer::normalize_samples(const Matrix& samples) const {
  require_dims(samples.rows() == center.size(), "normalizer: sample size mismatch");
  return ((samples.colwise() - center).array().colwise() / scale.array()).matrix();
}

Vector Normalizer::denormalize_inputs(const Vector& u, const std::vector<int>& input_indices) const {
  require_dims(u.size() == static_cast<Eigen::Index>(input_indices.size()),
               "normalizer: input size mismatch");
  Vector out(u.size());
  for (std::size_t i = 0; i < input_indices.size(); ++i) {
    const auto j = input_indices[i];
    out(static_cast<Eigen::Index>(i)) = u(static_cast<Eigen::Index>(i)) * scale(j) + center(j);
  }
  return out;
}

Normalizer Normalizer::identity(int w_dim) {
  return Normalizer{Vector::Zero(w_dim), Vector::Ones(w_dim)};
}

void TrajectoryDataset::validate() const {
  require(layout != nullptr, "dataset: missing layout");
  layout->validate();
  require(dt > 0.0, "dataset: dt must be positive");
  for (const auto& tr : trajectories) {
    require_dims(tr.w_dim() == layout->w_dim, "dataset: trajectory sample dimension mismatch");
    require(tr.T() >= 0, "dataset: empty trajectory");
    require(tr.layout == nullptr || tr.layout->same_partition(*layout), "dataset: mixed layouts");
    require(tr.dt == dt, "dataset: mixed sampling periods");
  }
  require(setpoint.size() == 0 || setpoint.size() == layout->w_dim, "dataset: setpoint size");
}

std::size_t TrajectoryDataset::window_count(int L) const {
  std::size_t n = 0;
  for (const auto& tr : trajectories) {
    if (tr.T() >= L) n += static_cast<std::size_t>(tr.T() - L + 1);
  }
  return n;
}

Window make_window(const Trajectory& traj, int k, int L) {
  if (L < 0 || k < L || k > traj.T()) {
    throw IndexOutOfRange("make_window: need L <= k <= T (k=" + std::to_string(k) +
                          ", L=" + std::to_string(L) + ", T=" + std::to_string(traj.T()) + ")");
  }
  const auto w = traj.samples.rows();
  Window win;
  win.L = L;
  win.layout = traj.layout;
  win.data = Eigen::Map<const Vector>(traj.samples.col(k - L).data(), (L + 1) * w);
  return win;
}

std::vector<std::pair<Window, Window>> sliding_pairs(const Trajectory& traj, int L) {
  std::vector<std::pair<Window, Window>> pairs;
  if (traj.T() < L + 1) return pairs;
  pairs.reserve(static_cast<std::size_t>(traj.T() - L));
  for (int k = L + 1; k <= traj.T(); ++k) {
    pairs.emplace_back(make_window(traj, k - 1, L), make_window(traj, k, L));
  }
  return pairs;
}

Matrix build_hankel(const Trajectory& traj, int L) {
  if (L < 0 || traj.T() < L) {
    throw ValidationError("build_hankel: trajectory too short (T=" + std::to_string(traj.T()) +
                          ", L=" + std::to_string(L) + ")");
  }
  const auto w = traj.samples.rows();
  const auto rows = (L + 1) * w;
  const auto cols = traj.T() + 1 - L;
  Matrix H(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    H.col(j) = Eigen::Map<const Vector>(traj.samples.col(j).data(), rows);
  }
  return H;
}

RankReport check_rank(const Matrix& H, int L, int u_dim, int n_B, double tol) {
  require(H.size() > 0, "check_rank: empty matrix");
  require(tol > 0.0, "check_rank: tolerance must be positive");
  RankReport report;
  report.required = (L + 1) * u_dim + n_B;
  Eigen::BDCSVD<Matrix> svd(H);
  report.singular_values = svd.singularValues();
  const double smax = report.singular_values.size() ? report.singular_values(0) : 0.0;
  if (smax > 0.0) {
    report.numerical_rank =
        static_cast<int>((report.singular_values.array() > tol * smax).count());
  }
  report.satisfied = report.numerical_rank == report.required;
  return report;
}

Normalizer fit_normalizer(const TrajectoryDataset& ds, const Vector& setpoint,
                          std::vector<int>* degenerate) {
  require(ds.layout != nullptr && !ds.trajectories.empty(), "fit_normalizer: empty dataset");
  const int w = ds.layout->w_dim;
  require_dims(setpoint.size() == w, "fit_normalizer: setpoint size mismatch");

  // Two-pass mean/variance over every sample of every trajectory.
  Vector sum = Vector::Zero(w);
  double n = 0.0;
  for (const auto& tr : ds.trajectories) {
    sum += tr.samples.rowwise().sum();
    n += static_cast<double>(tr.samples.cols());
  }
  const Vector mean = sum / n;
  Vector sq = Vector::Zero(w);
  for (const auto& tr : ds.trajectories) {
    sq += (tr.samples.colwise() - mean).array().square().matrix().rowwise().sum();
  }

  Normalizer norm;
  norm.center = setpoint;
  norm.scale = (sq / n).array().sqrt().matrix();
  if (degenerate) degenerate->clear();
  for (int i = 0; i < w; ++i) {
    if (!(norm.scale(i) >= 1e-12)) {
      norm.scale(i) = 1.0;
      if (degenerate) degenerate->push_back(i);
    }
  }
  return norm;
}

Matrix build_mosaic_hankel(const std::vector<Trajectory>& trajs, int L) {
  require(!trajs.empty(), "build_mosaic_hankel: no trajectories");
  require(L >= 0, "build_mosaic_hankel: L must be non-negative");
  const Eigen::Index w_dim = trajs.front().samples.rows();
  Eigen::Index cols = 0;
  for (const auto& tr : trajs) {
    require_dims(tr.samples.rows() == w_dim, "build_mosaic_hankel: trajectories disagree on w_dim");
    cols += std::max<Eigen::Index>(0, tr.samples.cols() - L);
  }
  require(cols > 0, "build_mosaic_hankel: every trajectory is shorter than L + 1 samples");
  Matrix H(static_cast<Eigen::Index>(L + 1) * w_dim, cols);
  Eigen::Index c = 0;
  for (const auto& tr : trajs)
    for (Eigen::Index j = 0; j + L < tr.samples.cols(); ++j, ++c) H.col(c) = tr.samples.middleCols(j, L + 1).reshaped();
  return H;
}

}  // namespace intrinsic::data
