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
#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "intrinsic/calib.hpp"
#include "intrinsic/checkpoint.hpp"
#include "intrinsic/plant.hpp"
#include "test_support.hpp"

namespace intrinsic::calib {
namespace {

Architecture small_arch() {
  Architecture a;
  a.hidden_width = 12;
  a.hidden_layers = 1;
  a.lyap_width = 8;
  a.lyap_layers = 1;
  return a;
}

data::TrajectoryDataset drone_data(int count, int length, std::uint64_t seed, const char* split = "train") {
  sim::DronePlant drone;
  auto cfg = sim::GeneratorConfig::drone(count, length, seed);
  cfg.split = split;
  return sim::generate_dataset(drone, cfg);
}

CalibModel small_model(const data::TrajectoryDataset& ds, int L = 2, std::uint64_t seed = 0) {
  const auto norm = data::fit_normalizer(ds, Vector::Zero(ds.layout->w_dim));
  return CalibModel::create(ds.layout, L, 4, norm, small_arch(), seed);
}

// Term-by-term re-evaluation of the objective with plain forward passes.
LossBreakdown reference_loss(const CalibModel& m, const PairBatch& b, const TrainConfig& c) {
  const Eigen::Index w = m.layout->w_dim, shift = m.L * w;
  const Matrix gp = m.chi_batch(b.prev), gn = m.chi_batch(b.next), gc = m.psi_batch(gp);
  const Matrix rp = m.eta_batch(gp), rn = m.eta_batch(gn), rc = m.eta_batch(gc);
  const Vector chi0 = m.chi.forward(m.params, Vector::Zero(m.window_size()));
  const Vector eta0 = m.eta.forward(m.params, Vector::Zero(m.g_dim));
  LossBreakdown t;
  t.recon = (b.prev - rp).array().square().mean();
  t.anchor_chi = c.lambda_chi * chi0.cwiseAbs().mean();
  t.anchor_eta = c.lambda_eta * eta0.cwiseAbs().mean();
  t.weave = c.lambda_w * (rn.leftCols(shift) - rp.rightCols(shift)).array().square().mean();
  t.inf = c.lambda_inf * ((b.prev - rp).cwiseAbs().maxCoeff() + (b.next - rn).cwiseAbs().maxCoeff());
  t.subset = c.lambda_e * (rc.leftCols(shift) - rp.rightCols(shift)).array().square().mean();
  t.lyap_anchor = c.lambda_V * m.lyap.forward(m.params, chi0);
  const Vector gap = m.v_batch(gc) - (1 - c.beta) * m.v_batch(gp);
  t.decay = c.lambda_grad * gap.cwiseMax(0.0).mean();
  return t;
}

void expect_breakdown_near(const LossBreakdown& a, const LossBreakdown& b, double tol) {
  EXPECT_NEAR(a.recon, b.recon, tol);
  EXPECT_NEAR(a.anchor_chi, b.anchor_chi, tol);
  EXPECT_NEAR(a.anchor_eta, b.anchor_eta, tol);
  EXPECT_NEAR(a.weave, b.weave, tol);
  EXPECT_NEAR(a.inf, b.inf, tol);
  EXPECT_NEAR(a.subset, b.subset, tol);
  EXPECT_NEAR(a.lyap_anchor, b.lyap_anchor, tol);
  EXPECT_NEAR(a.decay, b.decay, tol);
}

TEST(CalibModel, DroneStateDimensionIsNineteen) {
  const auto ds = drone_data(2, 21, 1);
  const auto norm = data::fit_normalizer(ds, Vector::Zero(6));
  const CalibModel m = CalibModel::create(ds.layout, 4, 4, norm, small_arch());
  EXPECT_EQ(m.g_dim, 19);
  EXPECT_EQ(m.chi.input_dim(), 30);
  EXPECT_EQ(m.chi.output_dim(), 19);
  EXPECT_EQ(m.eta.output_dim(), 30);
  EXPECT_EQ(m.psi.output_dim(), 19);
  EXPECT_EQ(m.params.size(), m.lyap.phi.end());
}

TEST(CalibModel, CreationIsSeeded) {
  const auto ds = drone_data(2, 21, 1);
  EXPECT_EQ(small_model(ds, 2, 5).params, small_model(ds, 2, 5).params);
  EXPECT_NE(small_model(ds, 2, 5).params, small_model(ds, 2, 6).params);
}

TEST(WindowPairs, EveryPairOverlapsExactly) {
  const auto ds = drone_data(5, 21, 2);
  const auto norm = data::fit_normalizer(ds, Vector::Zero(6));
  const WindowPairs pairs(ds, norm, 3);
  EXPECT_EQ(pairs.size(), 5u * (20 - 3));
  const PairBatch all = pairs.all();
  EXPECT_EQ(all.next.leftCols(18), all.prev.rightCols(18));
}

TEST(Loss, PerfectAutoencoderHasZeroIntrinsicLoss) {
  // All-input layout with n_B = 0 gives g_dim equal to the window size, so a
  // single identity layer is an exact bijection.
  auto layout = std::make_shared<const data::SignalLayout>(data::SignalLayout::make({"a", "b"}, {0, 1}));
  data::TrajectoryDataset ds;
  ds.layout = layout;
  ds.trajectories.push_back(testing::integrator_trajectory(30, 3));
  ds.trajectories.back().layout = layout;
  Architecture arch;
  arch.hidden_layers = 0;
  CalibModel m = CalibModel::create(layout, 1, 0, data::Normalizer::identity(2), arch);
  ASSERT_EQ(m.g_dim, 4);
  for (const nn::DenseNet* net : {&m.chi, &m.eta}) {
    m.params.segment(net->offset(), net->param_count()).setZero();
    for (int i = 0; i < 4; ++i) m.params(net->weight_offset(0) + i * 4 + i) = 1.0;
  }
  const PairBatch b = WindowPairs(ds, m.normalizer, 1).all();
  const LossBreakdown t = loss_intrinsic(m, b, TrainConfig{});
  EXPECT_EQ(t.intrinsic(), 0.0);
  EXPECT_EQ(t.controlled(), 0.0);
}

TEST(Loss, ZeroWeightsReduceToReconstructionMse) {
  const auto ds = drone_data(3, 21, 4);
  const CalibModel m = small_model(ds);
  const PairBatch b = WindowPairs(ds, m.normalizer, m.L).all();
  TrainConfig c;
  c.lambda_chi = c.lambda_eta = c.lambda_w = c.lambda_inf = c.lambda_e = c.lambda_V = c.lambda_grad = 0.0;
  const LossBreakdown t = loss_total(m, b, c);
  const double mse = (b.prev - m.eta_batch(m.chi_batch(b.prev))).array().square().mean();
  EXPECT_NEAR(t.total(), mse, 1e-14);
  EXPECT_EQ(t.total(), t.recon);
}

TEST(Loss, MatchesTermByTermReference) {
  const auto ds = drone_data(4, 21, 5);
  CalibModel m = small_model(ds);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01(0.0, 0.2);
  for (auto& p : m.params) p += n01(rng);  // move off the anchored point
  const WindowPairs pairs(ds, m.normalizer, m.L);
  const PairBatch one = pairs.gather({}, 7, 8);
  const PairBatch many = pairs.gather({}, 0, 40);
  TrainConfig c;
  c.lambda_inf = 0.3;
  c.lambda_V = 2.0;
  for (const PairBatch* b : {&one, &many}) {
    const LossBreakdown got = loss_total(m, *b, c);
    expect_breakdown_near(got, reference_loss(m, *b, c), 1e-12);
    const LossBreakdown in = loss_intrinsic(m, *b, c), ctl = loss_controlled(m, *b, c);
    EXPECT_EQ(in.controlled(), 0.0);
    EXPECT_EQ(ctl.intrinsic(), 0.0);
    EXPECT_NEAR(in.total() + ctl.total(), got.total(), 1e-12);
  }
}

TEST(Loss, TotalIsTheSumOfTermsAndHingeIsNonnegative) {
  const auto ds = drone_data(4, 21, 6);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n01(0.0, 0.5);
  for (int draw = 0; draw < 20; ++draw) {
    CalibModel m = small_model(ds, 2, static_cast<std::uint64_t>(draw));
    for (auto& p : m.params) p += n01(rng);
    const PairBatch b = WindowPairs(ds, m.normalizer, m.L).gather({}, 0, 30);
    LossBreakdown terms;
    nn::Tape tape(m.params);
    const double total = tape.scalar(build_loss(tape, m, b, TrainConfig{}, &terms));
    const double sum = terms.recon + terms.anchor_chi + terms.anchor_eta + terms.weave + terms.inf + terms.subset +
                       terms.lyap_anchor + terms.decay;
    EXPECT_NEAR(total, sum, 1e-12 * std::max(1.0, std::abs(total)));
    EXPECT_GE(terms.decay, 0.0);
  }
}

TEST(Loss, ZeroTransitionWithAnchoredMaps) {
  const auto ds = drone_data(3, 21, 7);
  CalibModel m = small_model(ds);
  m.params.segment(m.psi.offset(), m.psi.param_count()).setZero();
  const PairBatch b = WindowPairs(ds, m.normalizer, m.L).all();
  const LossBreakdown t = loss_controlled(m, b, TrainConfig{});
  EXPECT_EQ(t.decay, 0.0);
  EXPECT_EQ(t.lyap_anchor, 0.0);  // fresh nets have zero biases, so chi(0) = 0
  const Eigen::Index shift = m.L * 6;
  const Matrix rp = m.eta_batch(m.chi_batch(b.prev));
  EXPECT_NEAR(t.subset, rp.rightCols(shift).array().square().mean(), 1e-14);
}

TEST(Loss, HingeIsPositivelyHomogeneousInV) {
  const auto ds = drone_data(3, 21, 8);
  CalibModel m = small_model(ds);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01(0.0, 0.5);
  for (auto& p : m.params) p += n01(rng);
  const PairBatch b = WindowPairs(ds, m.normalizer, m.L).all();
  const double base = loss_controlled(m, b, TrainConfig{}).decay;
  ASSERT_GT(base, 0.0);
  m.lyap.a *= 3.0;
  m.lyap.b *= 3.0;
  EXPECT_NEAR(loss_controlled(m, b, TrainConfig{}).decay, 3.0 * base, 1e-12 * base);
}

TEST(Loss, CompositeGradientMatchesFiniteDifferences) {
  const auto ds = drone_data(3, 21, 9);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01(0.0, 0.3);
  TrainConfig c;
  c.lambda_inf = 0.1;
  for (int draw = 0; draw < 3; ++draw) {
    CalibModel m = small_model(ds, 2, static_cast<std::uint64_t>(draw));
    for (auto& p : m.params) p += n01(rng);
    const PairBatch b = WindowPairs(ds, m.normalizer, m.L).gather({}, static_cast<std::size_t>(draw * 5), static_cast<std::size_t>(draw * 5 + 8));
    const nn::ValueAndGrad vg = nn::grad([&](nn::Tape& t) { return build_loss(t, m, b, c); }, m.params);
    double worst = 0.0, scale = 0.0;
    Vector fd(m.params.size());
    for (Eigen::Index i = 0; i < m.params.size(); ++i) {
      CalibModel a = m, z = m;
      a.params(i) += 1e-5;
      z.params(i) -= 1e-5;
      fd(i) = (loss_total(a, b, c).total() - loss_total(z, b, c).total()) / 2e-5;
    }
    scale = std::max(1e-3, fd.cwiseAbs().maxCoeff());
    worst = (vg.grad - fd).cwiseAbs().maxCoeff() / scale;
    EXPECT_LE(worst, 1e-5);
  }
}

TEST(Control, AnchoredModelReturnsSetpointInput) {
  const auto ds = drone_data(3, 21, 10);
  const CalibModel m = small_model(ds);
  const Vector u = control_action(m, Vector::Zero(m.window_size()));
  ASSERT_EQ(u.size(), 3);
  EXPECT_EQ(u, Vector::Zero(3));
  EXPECT_THROW(control_action(m, Vector::Zero(5)), DimensionMismatch);
}

TEST(Control, ActionIsTheInputSlotOfTheControlledWindow) {
  const auto ds = drone_data(3, 21, 11);
  CalibModel m = small_model(ds);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01(0.0, 0.3);
  for (auto& p : m.params) p += n01(rng);
  const Vector w = data::make_window(ds.trajectories[0], 10, m.L).data;
  const Vector wc = m.normalizer.denormalize_window(
      m.eta.forward(m.params, m.psi.forward(m.params, m.chi.forward(m.params, m.normalizer.normalize_window(w)))));
  const Vector last = wc.tail(6);
  const Vector u = control_action(m, w);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(u(i), last(3 + i), 1e-12 * std::max(1.0, std::abs(last(3 + i))));
}

TEST(Rollout, ZeroStepsIsTheReconstruction) {
  const auto ds = drone_data(3, 21, 12);
  const CalibModel m = small_model(ds);
  const Vector w = data::make_window(ds.trajectories[1], 5, m.L).data;
  const Prediction p = rollout_predicted(m, w, 0);
  ASSERT_EQ(p.manifest.cols(), 1);
  const Vector rec = m.normalizer.denormalize_window(m.eta.forward(m.params, m.chi.forward(m.params, m.normalizer.normalize_window(w))));
  EXPECT_LE((p.manifest.col(0) - rec.tail(6)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(rollout_predicted(m, w, -1), ValidationError);
}

TEST(Rollout, AnchoredModelFromZeroStaysZero) {
  const auto ds = drone_data(3, 21, 13);
  const CalibModel m = small_model(ds);
  const Prediction p = rollout_predicted(m, Vector::Zero(m.window_size()), 25);
  EXPECT_EQ(p.manifest, Matrix::Zero(6, 26));
  EXPECT_EQ(p.windows.size(), 26u);
}

TEST(Eval, FreshModelReportsAnchoringAndLargeErrors) {
  const auto ds = drone_data(5, 21, 14);
  const CalibModel m = small_model(ds);
  const EvalReport r = eval_model(m, ds, 0.05);
  EXPECT_EQ(r.windows, 5u * 18);
  EXPECT_EQ(r.chi0_inf, 0.0);
  EXPECT_EQ(r.eta0_inf, 0.0);
  EXPECT_EQ(r.v_chi0, 0.0);
  EXPECT_GT(r.recon_mse, 0.1);
  EXPECT_GE(r.violation_rate, 0.0);
  EXPECT_LE(r.violation_rate, 1.0);
}

TEST(Train, ZeroEpochsLeavesTheModelUnchanged) {
  const auto tr = drone_data(10, 21, 15), te = drone_data(3, 21, 16, "test");
  CalibModel m = small_model(tr);
  const Vector before = m.params;
  TrainConfig c;
  c.epochs = 0;
  const TrainResult res = train(m, tr, te, c);
  EXPECT_EQ(m.params, before);
  ASSERT_EQ(res.history.size(), 1u);
  EXPECT_EQ(res.best_epoch, 0);
}

TEST(Train, SeededRunsAreBitwiseIdenticalAndImprove) {
  const auto tr = drone_data(40, 21, 17), te = drone_data(10, 21, 18, "test");
  TrainConfig c;
  c.epochs = 4;
  c.batch_size = 32;
  c.seed = 3;
  CalibModel a = small_model(tr), b = small_model(tr);
  const TrainResult ra = train(a, tr, te, c), rb = train(b, tr, te, c);
  EXPECT_EQ(a.params, b.params);
  ASSERT_EQ(ra.history.size(), 5u);
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    EXPECT_EQ(ra.history[i].test.total(), rb.history[i].test.total());
    EXPECT_EQ(ra.history[i].test_eval.recon_mse, rb.history[i].test_eval.recon_mse);
  }
  EXPECT_LT(ra.best_test_loss, ra.history.front().test.total());
  EXPECT_LT(ra.history[static_cast<std::size_t>(ra.best_epoch)].test_eval.recon_mse,
            ra.history.front().test_eval.recon_mse);
}

TEST(Train, DivergenceIsDetected) {
  const auto tr = drone_data(5, 21, 19), te = drone_data(2, 21, 20, "test");
  CalibModel m = small_model(tr);
  TrainConfig c;
  c.epochs = 1;
  c.divergence_limit = 1e-9;
  EXPECT_THROW(train(m, tr, te, c), DivergenceError);
}

TEST(TrainConfig, ValidationAndJsonRoundTrip) {
  TrainConfig c;
  c.beta = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c.beta = 0.05;
  c.lambda_w = -1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c.lambda_w = 0.5;
  c.grad_clip = -1.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c.grad_clip = 2.5;
  c.lr_decay = 0.9;
  const TrainConfig back = train_config_from_json(train_config_to_json(c));
  EXPECT_EQ(back.lambda_w, 0.5);
  EXPECT_EQ(back.lr_decay, 0.9);
  EXPECT_EQ(back.grad_clip, 2.5);
  EXPECT_EQ(back.lambda_inf, 1e-5);
  EXPECT_EQ(back.lambda_grad, 10.0);
}

TEST(Checkpoint, RoundTripPreservesTheController) {
  const auto ds = drone_data(3, 21, 21);
  CalibModel m = small_model(ds, 4, 9);
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n01(0.0, 0.1);
  for (auto& p : m.params) p += n01(rng);
  TrainConfig c;
  c.epochs = 7;
  const auto path = testing::scratch_dir("ckpt") / "model.ckpt.json";
  save_checkpoint(path, m, c);
  TrainConfig cb;
  const CalibModel back = load_checkpoint(path, &cb);
  EXPECT_EQ(back.params, m.params);
  EXPECT_EQ(back.g_dim, 19);
  EXPECT_EQ(back.normalizer.scale, m.normalizer.scale);
  EXPECT_EQ(cb.epochs, 7);
  const Vector w = data::make_window(ds.trajectories[0], 12, 4).data;
  EXPECT_EQ(control_action(back, w), control_action(m, w));
  EXPECT_THROW(load_checkpoint(path.parent_path() / "missing.json"), IoError);
  {
    std::ofstream bad(path);
    bad << "{\"params\": [1, 2]}";
  }
  EXPECT_THROW(load_checkpoint(path), ValidationError);
}

TEST(Metrics, CsvHasOneRowPerEpoch) {
  const auto tr = drone_data(6, 21, 22), te = drone_data(2, 21, 23, "test");
  CalibModel m = small_model(tr);
  TrainConfig c;
  c.epochs = 2;
  const TrainResult res = train(m, tr, te, c);
  const auto path = testing::scratch_dir("metrics") / "metrics.csv";
  write_metrics_csv(path.string(), res.history);
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("epoch,lr,seconds,train_recon", 0), 0u);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

}  // namespace
}  // namespace intrinsic::calib
