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
#include <functional>
#include <string>
#include <vector>

#include "intrinsic/behavior_data.hpp"
#include "intrinsic/json_matrix.hpp"
#include "intrinsic/adam.hpp"
#include "intrinsic/lyapunov_head.hpp"

namespace intrinsic::calib {

struct Architecture {
  int hidden_width = 256;  // chi, eta, psi
  int hidden_layers = 2;
  int lyap_width = 128;  // phi
  int lyap_layers = 2;
  double a = 0.01;  // V >= a |g|^2
  double b = 100.0;  // V <= b |g|^2
};

struct TrainConfig {
  double lambda_chi = 1.0;
  double lambda_eta = 1.0;
  double lambda_w = 1.0;
  double lambda_inf = 1e-5;
  double lambda_e = 1.0;
  double lambda_V = 1.0;
  double lambda_grad = 10.0;
  double beta = 0.05;
  double lr = 1e-3;
  // Learning rate multiplier applied after every epoch.
  double lr_decay = 1.0;
  // Rescale each batch gradient to at most this Euclidean norm; 0 disables.
  double grad_clip = 0.0;
  int batch_size = 256;
  int epochs = 50;
  std::uint64_t seed = 0;
  double divergence_limit = 1e6;

  void validate() const;
};

io::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const io::json& j);

// State map chi, parameterization map eta, controlled transition psi and the
// Lyapunov head V, all sharing one flat parameter vector. Networks act on
// normalized windows.
struct CalibModel {
  data::LayoutPtr layout;
  int L = 0;
  int n_B = 0;
  int g_dim = 0;
  data::Normalizer normalizer;
  Architecture arch;
  nn::DenseNet chi;  // (L+1) w_dim -> g_dim
  nn::DenseNet eta;  // g_dim -> (L+1) w_dim
  nn::DenseNet psi;  // g_dim -> g_dim
  nn::LyapunovHead lyap;
  Vector params;
  std::uint64_t seed = 0;

  // g_dim = (L+1) u_dim + n_B; Xavier-initialized from seed.
  static CalibModel create(data::LayoutPtr layout, int L, int n_B, data::Normalizer normalizer,
                           Architecture arch = {}, std::uint64_t seed = 0);

  int window_size() const { return (L + 1) * layout->w_dim; }
  data::WindowSelectors selectors() const { return data::WindowSelectors(L, *layout); }
  void validate() const;

  // Batched inference on normalized windows / states, one per row.
  Matrix chi_batch(const Matrix& windows) const { return chi.forward_batch(params, windows); }
  Matrix eta_batch(const Matrix& states) const { return eta.forward_batch(params, states); }
  Matrix psi_batch(const Matrix& states) const { return psi.forward_batch(params, states); }
  Vector v_batch(const Matrix& states) const { return lyap.forward_batch(params, states); }
};

// Consecutive normalized windows (w_{k-1}, w_k), one pair per row.
struct PairBatch {
  Matrix prev;
  Matrix next;

  Eigen::Index size() const { return prev.rows(); }
};

// Index of every overlapping pair in a dataset, with normalized samples.
class WindowPairs {
 public:
  WindowPairs(const data::TrajectoryDataset& ds, const data::Normalizer& normalizer, int L);

  std::size_t size() const { return index_.size(); }
  int window_size() const { return window_size_; }
  PairBatch gather(const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) const;
  PairBatch all() const;

 private:
  std::vector<Matrix> normalized_;
  std::vector<std::pair<int, int>> index_;  // (trajectory, k) with the pair ending at k
  int L_ = 0;
  int window_size_ = 0;
};

// Weighted loss terms; total() is their sum.
struct LossBreakdown {
  // intrinsic behavior
  double recon = 0.0;
  double anchor_chi = 0.0;
  double anchor_eta = 0.0;
  double weave = 0.0;
  double inf = 0.0;
  // controlled behavior
  double subset = 0.0;
  double lyap_anchor = 0.0;
  double decay = 0.0;

  double intrinsic() const { return recon + anchor_chi + anchor_eta + weave + inf; }
  double controlled() const { return subset + lyap_anchor + decay; }
  double total() const { return intrinsic() + controlled(); }

  LossBreakdown& operator+=(const LossBreakdown& o);
  LossBreakdown scaled(double c) const;
};

io::json breakdown_to_json(const LossBreakdown& b);

// Records the full objective on the tape and returns the scalar total.
nn::Tape::Var build_loss(nn::Tape& tape, const CalibModel& model, const PairBatch& batch, const TrainConfig& cfg,
                         LossBreakdown* terms = nullptr);

// Forward-only evaluations; the controlled terms are zero in loss_intrinsic and
// the intrinsic ones zero in loss_controlled.
LossBreakdown loss_intrinsic(const CalibModel& model, const PairBatch& batch, const TrainConfig& cfg);
LossBreakdown loss_controlled(const CalibModel& model, const PairBatch& batch, const TrainConfig& cfg);
LossBreakdown loss_total(const CalibModel& model, const PairBatch& batch, const TrainConfig& cfg);

struct EvalReport {
  std::size_t windows = 0;
  double recon_mse = 0.0;
  double recon_max = 0.0;
  double weave_mse = 0.0;
  double subset_mse = 0.0;
  double violation_rate = 0.0;  // fraction with V(psi(g)) > (1 - beta) V(g)
  double violation_mean = 0.0;  // mean of max{V(psi(g)) - (1 - beta) V(g), 0}
  double chi0_inf = 0.0;        // |chi(0)|_inf
  double eta0_inf = 0.0;        // |eta(0)|_inf
  double v_chi0 = 0.0;          // V(chi(0))
};

io::json eval_to_json(const EvalReport& r);

EvalReport eval_model(const CalibModel& model, const WindowPairs& pairs, double beta);
EvalReport eval_model(const CalibModel& model, const data::TrajectoryDataset& ds, double beta);

struct EpochMetrics {
  int epoch = 0;  // 0 is the untrained model
  LossBreakdown train;
  LossBreakdown test;
  EvalReport test_eval;
  double lr = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> history;
  int best_epoch = 0;
  double best_test_loss = 0.0;
};

using EpochCallback = std::function<void(const EpochMetrics&, const CalibModel&, bool improved)>;

// Mini-batch Adam on the full objective. Leaves the best-by-test-loss
// parameters in the model. Throws DivergenceError when a batch loss exceeds
// cfg.divergence_limit or is not finite.
TrainResult train(CalibModel& model, const data::TrajectoryDataset& train_set, const data::TrajectoryDataset& test_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// u_k = Pi_u eta(psi(chi(w_{k-1}))) in physical units.
Vector control_action(const CalibModel& model, const Vector& window);

// g_0 = chi(w_init), g_{j+1} = psi(g_j); column j of `manifest` is Pi_0 eta(g_j)
// in physical units and windows[j] = eta(g_j).
struct Prediction {
  std::vector<Vector> windows;
  Matrix manifest;
};
Prediction rollout_predicted(const CalibModel& model, const Vector& window_init, int steps);

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& history);

}  // namespace intrinsic::calib
