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
// Acceptance checks for the full pipeline. Prints one PASS/FAIL line per
// criterion and exits nonzero when any criterion fails.
//
// Environment:
//   INTRINSIC_ACCEPT_OUT         artifact directory (default ./acceptance_artifacts)
//   INTRINSIC_ACCEPT_EPOCHS      CALIB training epochs (default 10, at most 50)
//   INTRINSIC_ACCEPT_CHECKPOINT  use this checkpoint for the closed-loop drone
//                                check instead of the freshly trained model
//   INTRINSIC_ACCEPT_ONLY        comma-separated criterion numbers to run; the
//                                rest are reported as SKIP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Core>

#include "intrinsic/calib.hpp"
#include "intrinsic/checkpoint.hpp"
#include "intrinsic/closed_loop.hpp"
#include "intrinsic/dataset_io.hpp"
#include "intrinsic/deepc.hpp"
#include "intrinsic/lti_behavior.hpp"
#include "intrinsic/plant.hpp"
#include "intrinsic/synthesis.hpp"

namespace fs = std::filesystem;
using namespace intrinsic;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

fs::path out_dir() {
  const char* env = std::getenv("INTRINSIC_ACCEPT_OUT");
  fs::path dir = env && *env ? fs::path(env) : fs::path("acceptance_artifacts");
  fs::create_directories(dir);
  return dir;
}

int env_int(const char* name, int fallback) {
  const char* env = std::getenv(name);
  return env && *env ? std::atoi(env) : fallback;
}

data::Trajectory integrator_trajectory(int T, std::uint64_t seed) {
  const auto plant = sim::LinearPlant::scalar_integrator();
  return sim::generate_trajectory(plant, sim::GeneratorConfig::linear(plant, 1, T + 1, seed), 0);
}

// ---------------------------------------------------------------------------

Outcome bijection() {
  const auto t0 = Clock::now();
  const data::Trajectory tr = integrator_trajectory(200, 11);
  const int L = 1;
  const Matrix H = data::build_hankel(tr, L);
  const auto rank = data::check_rank(H, L, 1, 1);
  const auto rep = lti::fit_lti(tr, L, 1);
  const double pinv_err = (rep.H_pinv * rep.H_r - Matrix::Identity(rep.g_dim, rep.g_dim)).cwiseAbs().rowwise().sum().maxCoeff();

  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;
  double round_trip = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Vector c(H.cols());
    for (auto& x : c) x = n01(rng);
    const Vector w = H * c / std::sqrt(static_cast<double>(H.cols()));
    round_trip = std::max(round_trip, (lti::eta(rep, lti::chi(rep, w)) - w).cwiseAbs().maxCoeff());
  }
  const double secs = since(t0);
  const bool pass = rank.numerical_rank == 3 && rank.required == 3 && pinv_err <= 1e-10 && round_trip <= 1e-9 && secs < 1.0;
  return {pass, "rank " + std::to_string(rank.numerical_rank) + " (required " + std::to_string(rank.required) +
                    "), |H_pinv H_r - I|_inf " + fmt(pinv_err) + ", eta(chi(w)) error " + fmt(round_trip) + ", " +
                    fmt(secs) + " s"};
}

Outcome weaving() {
  const auto t0 = Clock::now();
  const auto plant = sim::LinearPlant::double_integrator();
  const auto ds = sim::generate_dataset(plant, sim::GeneratorConfig::linear(plant, 3, 201, 12));
  const int L = 3;
  const auto rep = lti::fit_lti(ds, L, 2);
  double worst = 0.0;
  std::size_t pairs = 0;
  for (const auto& tr : ds.trajectories) {
    for (const auto& [prev, next] : data::sliding_pairs(tr, L)) {
      const Vector r = lti::weaving_residual(rep, lti::chi(rep, next.data), lti::chi(rep, prev.data));
      worst = std::max(worst, r.cwiseAbs().maxCoeff());
      ++pairs;
    }
  }
  const double secs = since(t0);
  return {worst <= 1e-8 && secs < 1.0,
          std::to_string(pairs) + " window pairs, max residual " + fmt(worst) + ", " + fmt(secs) + " s"};
}

Outcome linear_synthesis() {
  const auto t0 = Clock::now();
  const double beta = 0.05, bound = std::sqrt(1.0 - beta);
  const auto plant = sim::LinearPlant::double_integrator();
  const auto ds = sim::generate_dataset(plant, sim::GeneratorConfig::linear(plant, 1, 201, 13));
  const auto rep = lti::fit_lti(ds, 3, 2);
  const auto res = synth::solve_feasibility(synth::assemble(rep, beta));
  std::ostringstream d;
  bool pass = res.feasible();
  if (!pass) {
    d << "double integrator not certified (" << synth::to_string(res.status) << ")";
  } else {
    const auto& c = *res.controller;
    const auto& r = c.certificate;
    const bool residuals = r.weaving_residual <= 1e-6 && r.subset_residual <= 1e-6 && r.lmi_min_eig >= -1e-6;
    const bool radius = r.spectral_radius <= bound + 1e-8;
    const Matrix M = c.W.inverse();
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n01;
    double worst_final = 0.0, worst_ratio = 0.0;
    for (int i = 0; i < 100; ++i) {
      Vector g(rep.g_dim);
      for (auto& x : g) x = n01(rng);
      Vector w0 = rep.H_r * g;
      w0 /= w0.norm();
      const auto ws = synth::simulate_windows(rep, c.Psi, w0, 400);
      worst_final = std::max(worst_final, ws.back().norm());
      for (std::size_t k = 1; k < ws.size(); ++k) {
        const Vector gp = lti::chi(rep, ws[k - 1]), gk = lti::chi(rep, ws[k]);
        const double mp = std::sqrt(gp.dot(M * gp));
        if (mp < 1e-12) break;
        worst_ratio = std::max(worst_ratio, std::sqrt(gk.dot(M * gk)) / mp);
      }
    }
    const bool decay = worst_ratio <= bound * (1.0 + 1e-9);
    pass = residuals && radius && worst_final <= 1e-6 && decay;
    d << "weaving " << fmt(r.weaving_residual) << ", subset " << fmt(r.subset_residual) << ", lmi min eig "
      << fmt(r.lmi_min_eig) << ", rho " << fmt(r.spectral_radius) << " (bound " << fmt(bound) << "), max |w_400| "
      << fmt(worst_final) << ", max M-norm ratio " << fmt(worst_ratio);
  }

  const auto unstable = sim::LinearPlant::unstable_scalar();
  const auto uds = sim::generate_dataset(unstable, sim::GeneratorConfig::linear(unstable, 1, 20, 14));
  const auto urep = lti::fit_lti(uds, 1, 1);
  const auto ures = synth::solve_feasibility(synth::assemble(urep, beta));
  const double secs = since(t0);
  pass = pass && !ures.feasible() && secs < 30.0;
  d << "; unstable scalar " << (ures.feasible() ? "certified (wrong)" : "infeasible") << " ("
    << synth::to_string(ures.status) << "), " << fmt(secs) << " s";
  return {pass, d.str()};
}

data::TrajectoryDataset drone_dataset(int count, int length, std::uint64_t seed, const std::string& split) {
  sim::DronePlant drone;
  auto cfg = sim::GeneratorConfig::drone(count, length, seed);
  cfg.split = split;
  return sim::generate_dataset(drone, cfg);
}

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  const auto ds = drone_dataset(20, 61, 15, "train");
  const auto norm = data::fit_normalizer(ds, Vector::Zero(6));
  calib::TrainConfig cfg;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  double worst = 0.0;
  int checks = 0;
  for (int draw = 0; draw < 100; ++draw) {
    auto model = calib::CalibModel::create(ds.layout, 4, 4, norm, {}, static_cast<std::uint64_t>(draw));
    for (auto& p : model.params) p += 0.05 * n01(rng);
    const calib::WindowPairs pairs(ds, norm, 4);
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto batch = pairs.gather(order, 0, 16);
    const auto vg = nn::grad([&](nn::Tape& t) { return calib::build_loss(t, model, batch, cfg); }, model.params);
    for (int dir = 0; dir < 3; ++dir) {
      Vector v(model.params.size());
      for (auto& x : v) x = n01(rng);
      v /= v.norm();
      const double h = 1e-5;
      auto plus = model, minus = model;
      plus.params += h * v;
      minus.params -= h * v;
      const double fd =
          (calib::loss_total(plus, batch, cfg).total() - calib::loss_total(minus, batch, cfg).total()) / (2 * h);
      const double ad = vg.grad.dot(v);
      worst = std::max(worst, std::abs(ad - fd) / std::max({std::abs(ad), std::abs(fd), 1e-12}));
      ++checks;
    }
  }
  const double secs = since(t0);
  return {worst <= 1e-5 && secs < 60.0, std::to_string(checks) + " directional checks over 100 draws, max relative error " +
                                            fmt(worst) + ", " + fmt(secs) + " s"};
}

Outcome lyapunov_bounds() {
  const auto t0 = Clock::now();
  const auto ds = drone_dataset(2, 21, 16, "train");
  auto model = calib::CalibModel::create(ds.layout, 4, 4, data::fit_normalizer(ds, Vector::Zero(6)), {}, 5);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  for (auto& p : model.params) p += 0.5 * n01(rng);
  const double a = model.lyap.a, b = model.lyap.b;
  std::uniform_real_distribution<double> expo(-3.0, 3.0);
  long violations = 0;
  const int chunk = 10000;
  for (int c = 0; c < 100; ++c) {
    Matrix G(chunk, model.g_dim);
    for (Eigen::Index i = 0; i < G.rows(); ++i) {
      const double s = std::pow(10.0, expo(rng));
      for (Eigen::Index j = 0; j < G.cols(); ++j) G(i, j) = s * n01(rng);
    }
    const Vector V = model.v_batch(G);
    const Vector sq = G.rowwise().squaredNorm();
    for (Eigen::Index i = 0; i < V.size(); ++i) {
      if (!(a * sq(i) <= V(i) && V(i) <= b * sq(i))) ++violations;
    }
  }
  const double v0 = model.lyap.forward(model.params, Vector::Zero(model.g_dim));
  const double secs = since(t0);
  return {violations == 0 && v0 == 0.0 && secs < 10.0,
          "1e6 samples, " + std::to_string(violations) + " bound violations, V(0) = " + fmt(v0) + ", " + fmt(secs) + " s"};
}

// ---------------------------------------------------------------------------

struct TrainedModel {
  std::optional<calib::CalibModel> model;
  calib::TrainConfig cfg;
};

calib::TrainConfig desk_config(int epochs) {
  calib::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.lr_decay = 0.93;
  cfg.grad_clip = 1.0;
  cfg.seed = 0;
  return cfg;
}

Outcome calib_training(const fs::path& out, TrainedModel& trained) {
  const auto t0 = Clock::now();
  const int epochs = std::min(50, env_int("INTRINSIC_ACCEPT_EPOCHS", 10));
  const auto train_set = drone_dataset(5000, 61, 1, "train");
  const auto test_set = drone_dataset(500, 61, 2, "test");
  const auto norm = data::fit_normalizer(train_set, Vector::Zero(6));
  auto model = calib::CalibModel::create(train_set.layout, 4, 4, norm, {}, 0);
  const calib::TrainConfig cfg = desk_config(epochs);
  const auto result = calib::train(model, train_set, test_set, cfg, [](const calib::EpochMetrics& m, const calib::CalibModel&, bool improved) {
    std::cerr << "  epoch " << m.epoch << " test recon " << m.test_eval.recon_mse << " violation rate "
              << m.test_eval.violation_rate << " (" << m.seconds << " s)" << (improved ? " *" : "") << "\n";
  });
  calib::save_checkpoint(out / "calib.ckpt.json", model, cfg);
  calib::write_metrics_csv((out / "calib_metrics.csv").string(), result.history);
  const auto e = calib::eval_model(model, test_set, cfg.beta);
  const double init = result.history.front().test_eval.recon_mse;
  const double secs = since(t0);
  trained.model = std::move(model);
  trained.cfg = cfg;
  const bool ok = trained.model->g_dim == 19 && e.recon_mse <= 0.1 * init && e.violation_rate <= 0.10 &&
                  e.chi0_inf <= 1e-2 && e.eta0_inf <= 1e-2 && secs <= 900.0;
  return {ok, "g_dim " + std::to_string(trained.model->g_dim) + ", " + std::to_string(epochs) + " epochs (best " +
                  std::to_string(result.best_epoch) + "), test recon MSE " + fmt(e.recon_mse) + " vs initial " +
                  fmt(init) + " (ratio " + fmt(e.recon_mse / init) + "), violation rate " + fmt(e.violation_rate) +
                  ", |chi(0)|_inf " + fmt(e.chi0_inf) + ", |eta(0)|_inf " + fmt(e.eta0_inf) + ", " + fmt(secs / 60.0) +
                  " min"};
}

// Actuator limits equal to the ranges the training data was recorded with.
void drone_saturation(sim::ClosedLoopConfig& cl) {
  cl.saturation_lo = Eigen::Vector3d(0.0, -0.5, -5.0);
  cl.saturation_hi = Eigen::Vector3d(5.0, 0.5, 5.0);
}

Outcome calib_drone(const fs::path& out, const TrainedModel& trained) {
  const char* ckpt = std::getenv("INTRINSIC_ACCEPT_CHECKPOINT");
  std::optional<calib::CalibModel> loaded;
  if (ckpt && *ckpt) loaded = calib::load_checkpoint(ckpt);
  if (!loaded && !trained.model) return {false, "no trained model available"};
  const calib::CalibModel& model = loaded ? *loaded : *trained.model;

  sim::DronePlant drone;
  sim::ClosedLoopConfig cl;
  cl.L = model.L;
  cl.warmup = model.L;
  cl.steps = 900;
  cl.controller_tag = "calib";
  drone_saturation(cl);
  const auto log = sim::run_closed_loop(
      drone, [&](const Vector& w) { return calib::control_action(model, w); }, Eigen::Vector4d(8.0, -6.0, 5.0, 0.0),
      cl, [&](const Vector& w) { return model.lyap.forward(model.params, model.chi.forward(model.params, model.normalizer.normalize_window(w))); });
  sim::write_log_csv(log, out / "closed_loop_calib.csv");
  if (log.aborted) return {false, "closed loop aborted: " + log.diagnostic};

  const Matrix S = log.samples();
  const double dt = drone.dt();
  int entry = -1;
  double after = 0.0;
  for (Eigen::Index k = 0; k < S.cols(); ++k) {
    const double p = S.col(k).head(3).cwiseAbs().maxCoeff();
    if (entry < 0 && p <= 1.0) entry = static_cast<int>(k);
    if (entry >= 0) after = std::max(after, p);
  }
  const bool reached = entry >= 0 && entry * dt <= 60.0;
  const bool bounded = entry >= 0 && after <= 2.0;

  // Predicted trajectory from the first controlled window over 10 s.
  const int horizon = static_cast<int>(std::lround(10.0 / dt));
  const auto pred = calib::rollout_predicted(model, log.records[static_cast<std::size_t>(cl.warmup + 1)].window, horizon);
  double se = 0.0;
  {
    std::ofstream csv(out / "predicted_calib.csv");
    csv << "t,x,y,z,x_real,y_real,z_real\n";
    for (int j = 0; j <= horizon; ++j) {
      const Eigen::Index k = cl.warmup + j;
      se += (pred.manifest.col(j).head(3) - S.col(k).head(3)).squaredNorm() / 3.0;
      csv << io::format_double(k * dt);
      for (int i = 0; i < 3; ++i) csv << ',' << io::format_double(pred.manifest(i, j));
      for (int i = 0; i < 3; ++i) csv << ',' << io::format_double(S(i, k));
      csv << '\n';
    }
  }
  const double rmse = std::sqrt(se / (horizon + 1));
  const Vector final = S.col(S.cols() - 1).head(3);
  std::ostringstream d;
  d << (loaded ? "checkpoint " + std::string(ckpt) : std::string("freshly trained model")) << ", ";
  if (entry >= 0) {
    d << "within 1 m at t = " << fmt(entry * dt) << " s, max |p|_inf afterwards " << fmt(after);
  } else {
    d << "never within 1 m in " << fmt((S.cols() - 1) * dt) << " s";
  }
  d << ", final position (" << fmt(final(0)) << ", " << fmt(final(1)) << ", " << fmt(final(2))
    << "), prediction RMSE over 10 s " << fmt(rmse) << " m";
  return {reached && bounded && rmse <= 1.0, d.str()};
}

Outcome linear_drone(const fs::path& out) {
  sim::DronePlant drone;
  const auto cfg = sim::GeneratorConfig::drone_near_origin(1, 201, 1);
  const auto tr = sim::generate_trajectory(drone, cfg, 0);
  const int L = 5;
  const double beta = 0.05;
  std::ostringstream d;
  bool pass = false;

  const auto rep = lti::fit_lti(tr, L, 4);
  auto res = synth::solve_feasibility(synth::assemble(rep, beta));
  d << "g_dim " << rep.g_dim << ", synthesis at tol 1e-6: " << synth::to_string(res.status);
  if (!res.feasible()) {
    // Data from the nonlinear plant does not admit an exactly shift-invariant
    // span, so retry with a looser residual tolerance.
    synth::SolverOptions relaxed;
    relaxed.tol = 1e-2;
    res = synth::solve_feasibility(synth::assemble(rep, beta, 1e-6, relaxed));
    d << ", at tol 1e-2: " << synth::to_string(res.status);
  }
  d << " (weaving " << fmt(res.residuals.weaving_residual) << ", subset " << fmt(res.residuals.subset_residual) << ")";

  sim::ClosedLoopConfig cl;
  cl.L = L;
  cl.warmup = L;
  cl.steps = 600;
  const Vector x0 = Eigen::Vector4d(0.5, 0.5, -0.5, 0.0);
  if (res.feasible()) {
    cl.controller_tag = "lti";
    const Matrix K = res.controller->K;
    const auto log = sim::run_closed_loop(drone, [&](const Vector& w) -> Vector { return K * w; }, x0, cl);
    sim::write_log_csv(log, out / "closed_loop_lti_drone.csv");
    const Matrix S = log.samples();
    double tail = 0.0;
    for (Eigen::Index k = std::max<Eigen::Index>(0, S.cols() - 100); k < S.cols(); ++k)
      tail = std::max(tail, S.col(k).head(3).cwiseAbs().maxCoeff());
    pass = !log.aborted && tail <= 0.5;
    d << "; linear controller " << (log.aborted ? "aborted, " : "") << "max |p|_inf over the last 10 s " << fmt(tail);
  } else {
    d << "; no controller to simulate";
  }

  try {
    sim::DeepcController deepc({tr}, *tr.layout, L);
    cl.controller_tag = "deepc";
    const auto log = sim::run_closed_loop(drone, deepc, x0, cl);
    sim::write_log_csv(log, out / "closed_loop_deepc_drone.csv");
    const Matrix S = log.samples();
    d << "; DeePC " << (log.aborted ? "aborted" : "ran") << ", final |p|_inf "
      << fmt(S.col(S.cols() - 1).head(3).cwiseAbs().maxCoeff());
    pass = pass && !log.aborted;
  } catch (const Error& e) {
    d << "; DeePC failed: " << e.what();
    pass = false;
  }
  return {pass, d.str()};
}

// ---------------------------------------------------------------------------

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const fs::path& out) {
  std::vector<std::string> mismatched;
  auto check = [&](const std::string& stage, bool same) {
    if (!same) mismatched.push_back(stage);
  };

  // Dataset generation, in memory and on disk.
  const auto d1 = drone_dataset(30, 41, 21, "train"), d2 = drone_dataset(30, 41, 21, "train");
  bool same = true;
  for (std::size_t i = 0; i < d1.trajectories.size(); ++i) same = same && d1.trajectories[i].samples == d2.trajectories[i].samples;
  data::write_dataset(out / "det_a", d1);
  data::write_dataset(out / "det_b", d2);
  for (const auto& entry : fs::directory_iterator(out / "det_a"))
    same = same && file_bytes(entry.path()) == file_bytes(out / "det_b" / entry.path().filename());
  check("gen-data", same);

  // Behavior fit and synthesis.
  const auto plant = sim::LinearPlant::double_integrator();
  const auto lds = sim::generate_dataset(plant, sim::GeneratorConfig::linear(plant, 1, 201, 22));
  const auto r1 = lti::fit_lti(lds, 3, 2), r2 = lti::fit_lti(lds, 3, 2);
  check("fit-lti", r1.H_r == r2.H_r && r1.H_pinv == r2.H_pinv);
  const auto s1 = synth::solve_feasibility(synth::assemble(r1, 0.05));
  const auto s2 = synth::solve_feasibility(synth::assemble(r2, 0.05));
  check("synth", s1.feasible() && s2.feasible() && s1.controller->W == s2.controller->W &&
                     s1.controller->Y == s2.controller->Y && s1.iterations == s2.iterations);

  // CALIB training on a small configuration.
  calib::Architecture arch;
  arch.hidden_width = 32;
  arch.lyap_width = 16;
  const auto te = drone_dataset(10, 41, 23, "test");
  const auto norm = data::fit_normalizer(d1, Vector::Zero(6));
  calib::TrainConfig cfg = desk_config(2);
  auto m1 = calib::CalibModel::create(d1.layout, 4, 4, norm, arch, 7);
  auto m2 = calib::CalibModel::create(d1.layout, 4, 4, norm, arch, 7);
  const auto h1 = calib::train(m1, d1, te, cfg), h2 = calib::train(m2, d2, te, cfg);
  check("train-calib", m1.params == m2.params && h1.history.back().test.total() == h2.history.back().test.total());

  // Closed loops with each controller.
  sim::ClosedLoopConfig cl;
  cl.L = 3;
  cl.warmup = 3;
  cl.steps = 200;
  const Matrix K = s1.controller ? s1.controller->K : Matrix::Zero(1, 8);
  auto lti_run = [&] {
    return sim::run_closed_loop(plant, [&](const Vector& w) -> Vector { return K * w; }, Eigen::Vector2d(1.0, -0.5), cl)
        .samples();
  };
  check("simulate lti", lti_run() == lti_run());
  sim::DronePlant drone;
  sim::ClosedLoopConfig dl;
  dl.L = 4;
  dl.warmup = 4;
  dl.steps = 200;
  auto calib_run = [&] {
    return sim::run_closed_loop(drone, [&](const Vector& w) { return calib::control_action(m1, w); },
                                Eigen::Vector4d(3.0, -2.0, 1.0, 0.2), dl)
        .samples();
  };
  check("simulate calib", calib_run() == calib_run());
  const sim::DeepcController deepc(lds.trajectories, *lds.layout, 3);
  auto deepc_run = [&] { return sim::run_closed_loop(plant, deepc, Eigen::Vector2d(1.0, -0.5), cl).samples(); };
  check("simulate deepc", deepc_run() == deepc_run());

  std::string detail = "gen-data, fit-lti, synth, train-calib, simulate (lti, calib, deepc) rerun";
  if (mismatched.empty()) return {true, detail + " bitwise identical"};
  detail += "; mismatch in";
  for (const auto& s : mismatched) detail += " " + s;
  return {false, detail};
}

}  // namespace

int main() {
  Eigen::setNbThreads(1);
  const fs::path out = out_dir();
  TrainedModel trained;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"bijection on integrator data", bijection},
      {"weaving residual on clean LTI data", weaving},
      {"linear stabilization synthesis", linear_synthesis},
      {"CALIB gradient fidelity", gradient_fidelity},
      {"Lyapunov head bounds", lyapunov_bounds},
      {"CALIB desk-scale training", [&] { return calib_training(out, trained); }},
      {"CALIB closed-loop drone", [&] { return calib_drone(out, trained); }},
      {"linear-design drone and DeePC baseline", [&] { return linear_drone(out); }},
      {"determinism", [&] { return determinism(out); }},
  };
  std::vector<bool> selected(criteria.size(), true);
  if (const char* only = std::getenv("INTRINSIC_ACCEPT_ONLY"); only && *only) {
    std::fill(selected.begin(), selected.end(), false);
    std::stringstream ss(only);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const int n = std::atoi(item.c_str());
      if (n >= 1 && n <= static_cast<int>(criteria.size())) selected[static_cast<std::size_t>(n - 1)] = true;
    }
  }
  int failed = 0, skipped = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!selected[i]) {
      ++skipped;
      std::cout << "CRITERION " << i + 1 << " SKIP  " << criteria[i].first << std::endl;
      continue;
    }
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << "CRITERION " << i + 1 << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << failed << " failed, " << skipped << " skipped, " << criteria.size() - failed - skipped
            << " passed; artifacts in " << fs::absolute(out).string() << std::endl;
  return failed ? 1 : 0;
}
