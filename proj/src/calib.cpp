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
#include "intrinsic/calib.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace intrinsic::calib {

using nn::Tape;

void TrainConfig::validate() const {
  for (double l : {lambda_chi, lambda_eta, lambda_w, lambda_inf, lambda_e, lambda_V, lambda_grad}) {
    require(l >= 0.0, "train config: loss weights must be nonnegative");
  }
  require(beta > 0.0 && beta <= 1.0, "train config: beta must lie in (0, 1]");
  require(lr > 0.0, "train config: lr must be positive");
  require(lr_decay > 0.0 && lr_decay <= 1.0, "train config: lr_decay must lie in (0, 1]");
  require(grad_clip >= 0.0, "train config: grad_clip must be nonnegative");
  require(batch_size > 0, "train config: batch_size must be positive");
  require(epochs >= 0, "train config: epochs must be nonnegative");
}

io::json train_config_to_json(const TrainConfig& c) {
  return {{"lambda_chi", c.lambda_chi}, {"lambda_eta", c.lambda_eta}, {"lambda_w", c.lambda_w},
          {"lambda_inf", c.lambda_inf}, {"lambda_e", c.lambda_e},     {"lambda_V", c.lambda_V},
          {"lambda_grad", c.lambda_grad}, {"beta", c.beta},           {"lr", c.lr},
          {"lr_decay", c.lr_decay},     {"grad_clip", c.grad_clip}, {"batch_size", c.batch_size}, {"epochs", c.epochs},
          {"seed", c.seed},             {"divergence_limit", c.divergence_limit}};
}

TrainConfig train_config_from_json(const io::json& j) {
  TrainConfig c;
  c.lambda_chi = j.value("lambda_chi", c.lambda_chi);
  c.lambda_eta = j.value("lambda_eta", c.lambda_eta);
  c.lambda_w = j.value("lambda_w", c.lambda_w);
  c.lambda_inf = j.value("lambda_inf", c.lambda_inf);
  c.lambda_e = j.value("lambda_e", c.lambda_e);
  c.lambda_V = j.value("lambda_V", c.lambda_V);
  c.lambda_grad = j.value("lambda_grad", c.lambda_grad);
  c.beta = j.value("beta", c.beta);
  c.lr = j.value("lr", c.lr);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.divergence_limit = j.value("divergence_limit", c.divergence_limit);
  c.validate();
  return c;
}

namespace {

std::vector<int> hidden_stack(int in, int width, int layers, int out) {
  std::vector<int> dims{in};
  for (int i = 0; i < layers; ++i) dims.push_back(width);
  dims.push_back(out);
  return dims;
}

}  // namespace

CalibModel CalibModel::create(data::LayoutPtr layout, int L, int n_B, data::Normalizer normalizer, Architecture arch,
                              std::uint64_t seed) {
  require(layout != nullptr, "calib: missing layout");
  layout->validate();
  require(L >= 0 && n_B >= 0, "calib: L and n_B must be nonnegative");
  require(arch.hidden_layers >= 0 && arch.lyap_layers >= 0 && arch.hidden_width > 0 && arch.lyap_width > 0,
          "calib: invalid architecture");
  CalibModel m;
  m.layout = std::move(layout);
  m.L = L;
  m.n_B = n_B;
  m.g_dim = (L + 1) * m.layout->u_dim() + n_B;
  require(m.g_dim > 0, "calib: intrinsic state dimension must be positive");
  m.normalizer = std::move(normalizer);
  m.arch = arch;
  m.seed = seed;
  const int ws = m.window_size();
  m.chi = nn::DenseNet(hidden_stack(ws, arch.hidden_width, arch.hidden_layers, m.g_dim), 0);
  m.eta = nn::DenseNet(hidden_stack(m.g_dim, arch.hidden_width, arch.hidden_layers, ws), m.chi.end());
  m.psi = nn::DenseNet(hidden_stack(m.g_dim, arch.hidden_width, arch.hidden_layers, m.g_dim), m.eta.end());
  m.lyap.a = arch.a;
  m.lyap.b = arch.b;
  m.lyap.phi = nn::DenseNet(hidden_stack(m.g_dim, arch.lyap_width, arch.lyap_layers, 1), m.psi.end());
  m.params = Vector::Zero(m.lyap.phi.end());
  std::mt19937_64 rng(seed);
  for (const nn::DenseNet* net : {&m.chi, &m.eta, &m.psi, &m.lyap.phi}) net->init_xavier(m.params, rng);
  m.validate();
  return m;
}

void CalibModel::validate() const {
  require(layout != nullptr, "calib: missing layout");
  require(g_dim == (L + 1) * layout->u_dim() + n_B, "calib: g_dim must equal (L+1) u_dim + n_B");
  normalizer.validate();
  require_dims(normalizer.w_dim() == layout->w_dim, "calib: normalizer dimension mismatch");
  require_dims(chi.input_dim() == window_size() && chi.output_dim() == g_dim, "calib: chi shape");
  require_dims(eta.input_dim() == g_dim && eta.output_dim() == window_size(), "calib: eta shape");
  require_dims(psi.input_dim() == g_dim && psi.output_dim() == g_dim, "calib: psi shape");
  require_dims(lyap.phi.input_dim() == g_dim, "calib: phi shape");
  lyap.validate();
  require_dims(params.size() == lyap.phi.end(), "calib: parameter vector size");
}

WindowPairs::WindowPairs(const data::TrajectoryDataset& ds, const data::Normalizer& normalizer, int L)
    : L_(L), window_size_((L + 1) * ds.layout->w_dim) {
  ds.validate();
  normalized_.reserve(ds.trajectories.size());
  for (std::size_t t = 0; t < ds.trajectories.size(); ++t) {
    const auto& tr = ds.trajectories[t];
    normalized_.push_back(normalizer.normalize_samples(tr.samples));
    for (int k = L + 1; k <= tr.T(); ++k) index_.emplace_back(static_cast<int>(t), k);
  }
}

PairBatch WindowPairs::gather(const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) const {
  const auto n = static_cast<Eigen::Index>(end - begin);
  PairBatch b;
  b.prev.resize(n, window_size_);
  b.next.resize(n, window_size_);
  const auto w = normalized_.empty() ? 0 : normalized_.front().rows();
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto [t, k] = index_[order.empty() ? begin + static_cast<std::size_t>(r) : order[begin + static_cast<std::size_t>(r)]];
    const Matrix& s = normalized_[static_cast<std::size_t>(t)];
    b.prev.row(r) = Eigen::Map<const Eigen::RowVectorXd>(s.col(k - 1 - L_).data(), (L_ + 1) * w);
    b.next.row(r) = Eigen::Map<const Eigen::RowVectorXd>(s.col(k - L_).data(), (L_ + 1) * w);
  }
  return b;
}

PairBatch WindowPairs::all() const { return gather({}, 0, index_.size()); }

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& o) {
  recon += o.recon;
  anchor_chi += o.anchor_chi;
  anchor_eta += o.anchor_eta;
  weave += o.weave;
  inf += o.inf;
  subset += o.subset;
  lyap_anchor += o.lyap_anchor;
  decay += o.decay;
  return *this;
}

LossBreakdown LossBreakdown::scaled(double c) const {
  LossBreakdown b = *this;
  b.recon *= c;
  b.anchor_chi *= c;
  b.anchor_eta *= c;
  b.weave *= c;
  b.inf *= c;
  b.subset *= c;
  b.lyap_anchor *= c;
  b.decay *= c;
  return b;
}

io::json breakdown_to_json(const LossBreakdown& b) {
  return {{"recon", b.recon},   {"anchor_chi", b.anchor_chi},   {"anchor_eta", b.anchor_eta},
          {"weave", b.weave},   {"inf", b.inf},                 {"subset", b.subset},
          {"lyap_anchor", b.lyap_anchor}, {"decay", b.decay},   {"intrinsic", b.intrinsic()},
          {"controlled", b.controlled()}, {"total", b.total()}};
}

namespace {

enum class Part { kIntrinsic, kControlled, kBoth };

Tape::Var record_loss(Tape& tape, const CalibModel& model, const PairBatch& batch, const TrainConfig& cfg,
                      Part part, LossBreakdown* terms) {
  require_dims(batch.prev.cols() == model.window_size() && batch.next.cols() == model.window_size() &&
                   batch.prev.rows() == batch.next.rows() && batch.size() > 0,
               "calib loss: batch does not match the model window size");
  const auto n = batch.size();
  const auto w = static_cast<Eigen::Index>(model.layout->w_dim);
  const auto shift = static_cast<Eigen::Index>(model.L) * w;

  const auto chi_b = model.chi.bind(tape);
  const auto eta_b = model.eta.bind(tape);
  const auto psi_b = model.psi.bind(tape);
  const auto phi_b = model.lyap.phi.bind(tape);

  // One chi pass over [w_{k-1}; w_k; 0].
  Matrix windows(2 * n + 1, model.window_size());
  windows.topRows(n) = batch.prev;
  windows.middleRows(n, n) = batch.next;
  windows.bottomRows(1).setZero();
  const Tape::Var X = tape.constant(std::move(windows));
  const Tape::Var x_prev = tape.rows(X, 0, n);
  const Tape::Var x_next = tape.rows(X, n, n);
  const Tape::Var G = model.chi.forward(tape, chi_b, X);
  const Tape::Var g_prev = tape.rows(G, 0, n);
  const Tape::Var g_next = tape.rows(G, n, n);
  const Tape::Var chi0 = tape.rows(G, 2 * n, 1);

  const Tape::Var g_ctrl = model.psi.forward(tape, psi_b, g_prev);

  // One eta pass over [g_{k-1}; g_k; g^c_k; 0].
  const Tape::Var zero_g = tape.constant(Matrix::Zero(1, model.g_dim));
  const Tape::Var E = model.eta.forward(tape, eta_b, tape.concat_rows({g_prev, g_next, g_ctrl, zero_g}));
  const Tape::Var rec_prev = tape.rows(E, 0, n);
  const Tape::Var rec_next = tape.rows(E, n, n);
  const Tape::Var rec_ctrl = tape.rows(E, 2 * n, n);
  const Tape::Var eta0 = tape.rows(E, 3 * n, 1);

  std::vector<std::pair<Tape::Var, double*>> parts;
  LossBreakdown scratch;
  LossBreakdown& t = terms ? *terms : scratch;
  t = LossBreakdown{};

  if (part != Part::kControlled) {
    const Tape::Var err_prev = tape.sub(x_prev, rec_prev);
    const Tape::Var err_next = tape.sub(x_next, rec_next);
    parts.emplace_back(tape.mean_square(err_prev), &t.recon);
    parts.emplace_back(tape.scale(tape.mean_abs(chi0), cfg.lambda_chi), &t.anchor_chi);
    parts.emplace_back(tape.scale(tape.mean_abs(eta0), cfg.lambda_eta), &t.anchor_eta);
    parts.emplace_back(
        tape.scale(tape.mean_square(tape.sub(tape.cols(rec_next, 0, shift), tape.cols(rec_prev, w, shift))),
                   cfg.lambda_w),
        &t.weave);
    parts.emplace_back(tape.scale(tape.add(tape.max_abs(err_prev), tape.max_abs(err_next)), cfg.lambda_inf),
                       &t.inf);
  }
  if (part != Part::kIntrinsic) {
    parts.emplace_back(
        tape.scale(tape.mean_square(tape.sub(tape.cols(rec_ctrl, 0, shift), tape.cols(rec_prev, w, shift))),
                   cfg.lambda_e),
        &t.subset);
    const Tape::Var V = model.lyap.forward(tape, phi_b, tape.concat_rows({g_prev, g_ctrl, chi0}));
    const Tape::Var v_prev = tape.rows(V, 0, n);
    const Tape::Var v_ctrl = tape.rows(V, n, n);
    const Tape::Var v_zero = tape.rows(V, 2 * n, 1);
    parts.emplace_back(tape.scale(v_zero, cfg.lambda_V), &t.lyap_anchor);
    parts.emplace_back(
        tape.scale(tape.mean(tape.relu(tape.sub(v_ctrl, tape.scale(v_prev, 1.0 - cfg.beta)))), cfg.lambda_grad),
        &t.decay);
  }

  Tape::Var total = parts.front().first;
  *parts.front().second = tape.scalar(total);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    *parts[i].second = tape.scalar(parts[i].first);
    total = tape.add(total, parts[i].first);
  }
  return total;
}

LossBreakdown evaluate_part(const CalibModel& model, const PairBatch& batch, const TrainConfig& cfg, Part part) {
  Tape tape(model.params);
  LossBreakdown terms;
  record_loss(tape, model, batch, cfg, part, &terms);
  return terms;
}

}  // namespace

Tape::Var build_loss(Tape& tape, const CalibModel& model, const PairBatch& batch, const TrainConfig& cfg,
                     LossBreakdown* terms) {
  return record_loss(tape, model, batch, cfg, Part::kBoth, terms);
}

LossBreakdown loss_intrinsic(const CalibModel& model, const PairBatch& batch, const TrainConfig& cfg) {
  return evaluate_part(model, batch, cfg, Part::kIntrinsic);
}

LossBreakdown loss_controlled(const CalibModel& model, const PairBatch& batch, const TrainConfig& cfg) {
  return evaluate_part(model, batch, cfg, Part::kControlled);
}

LossBreakdown loss_total(const CalibModel& model, const PairBatch& batch, const TrainConfig& cfg) {
  return evaluate_part(model, batch, cfg, Part::kBoth);
}

io::json eval_to_json(const EvalReport& r) {
  return {{"windows", r.windows},
          {"recon_mse", r.recon_mse},
          {"recon_max", r.recon_max},
          {"weave_mse", r.weave_mse},
          {"subset_mse", r.subset_mse},
          {"violation_rate", r.violation_rate},
          {"violation_mean", r.violation_mean},
          {"chi0_inf", r.chi0_inf},
          {"eta0_inf", r.eta0_inf},
          {"v_chi0", r.v_chi0}};
}

EvalReport eval_model(const CalibModel& model, const WindowPairs& pairs, double beta) {
  EvalReport r;
  const auto w = static_cast<Eigen::Index>(model.layout->w_dim);
  const auto shift = static_cast<Eigen::Index>(model.L) * w;
  const Vector zero_w = Vector::Zero(model.window_size());
  const Vector chi0 = model.chi.forward(model.params, zero_w);
  r.chi0_inf = chi0.cwiseAbs().maxCoeff();
  r.eta0_inf = model.eta.forward(model.params, Vector::Zero(model.g_dim)).cwiseAbs().maxCoeff();
  r.v_chi0 = model.lyap.forward(model.params, chi0);

  constexpr std::size_t kChunk = 4096;
  double sq = 0.0, weave = 0.0, subset = 0.0, viol_sum = 0.0;
  std::size_t violations = 0;
  for (std::size_t begin = 0; begin < pairs.size(); begin += kChunk) {
    const std::size_t end = std::min(pairs.size(), begin + kChunk);
    const PairBatch b = pairs.gather({}, begin, end);
    const Matrix g_prev = model.chi_batch(b.prev);
    const Matrix g_next = model.chi_batch(b.next);
    const Matrix g_ctrl = model.psi_batch(g_prev);
    const Matrix rec_prev = model.eta_batch(g_prev);
    const Matrix rec_next = model.eta_batch(g_next);
    const Matrix rec_ctrl = model.eta_batch(g_ctrl);
    const Matrix err = b.prev - rec_prev;
    sq += err.squaredNorm();
    r.recon_max = std::max(r.recon_max, err.cwiseAbs().maxCoeff());
    weave += (rec_next.leftCols(shift) - rec_prev.middleCols(w, shift)).squaredNorm();
    subset += (rec_ctrl.leftCols(shift) - rec_prev.middleCols(w, shift)).squaredNorm();
    const Vector gap = model.v_batch(g_ctrl) - (1.0 - beta) * model.v_batch(g_prev);
    for (Eigen::Index i = 0; i < gap.size(); ++i) {
      if (gap(i) > 0.0) {
        ++violations;
        viol_sum += gap(i);
      }
    }
  }
  r.windows = pairs.size();
  if (r.windows > 0) {
    const double n = static_cast<double>(r.windows);
    r.recon_mse = sq / (n * static_cast<double>(model.window_size()));
    r.weave_mse = weave / (n * static_cast<double>(shift));
    r.subset_mse = subset / (n * static_cast<double>(shift));
    r.violation_rate = static_cast<double>(violations) / n;
    r.violation_mean = viol_sum / n;
  }
  return r;
}

EvalReport eval_model(const CalibModel& model, const data::TrajectoryDataset& ds, double beta) {
  return eval_model(model, WindowPairs(ds, model.normalizer, model.L), beta);
}

namespace {

LossBreakdown dataset_loss(const CalibModel& model, const WindowPairs& pairs, const TrainConfig& cfg) {
  LossBreakdown sum;
  std::size_t batches = 0;
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (std::size_t begin = 0; begin < pairs.size(); begin += bs) {
    sum += loss_total(model, pairs.gather({}, begin, std::min(pairs.size(), begin + bs)), cfg);
    ++batches;
  }
  return batches ? sum.scaled(1.0 / static_cast<double>(batches)) : sum;
}

}  // namespace

TrainResult train(CalibModel& model, const data::TrajectoryDataset& train_set, const data::TrajectoryDataset& test_set,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  model.validate();
  require(train_set.layout && train_set.layout->same_partition(*model.layout), "train: dataset layout mismatch");
  const WindowPairs train_pairs(train_set, model.normalizer, model.L);
  const WindowPairs test_pairs(test_set, model.normalizer, model.L);
  require(train_pairs.size() > 0, "train: dataset has no window pairs at this depth");

  TrainResult result;
  auto clock = std::chrono::steady_clock::now();
  EpochMetrics init;
  init.epoch = 0;
  init.test = dataset_loss(model, test_pairs, cfg);
  init.test_eval = eval_model(model, test_pairs, cfg.beta);
  init.lr = cfg.lr;
  result.history.push_back(init);
  result.best_epoch = 0;
  result.best_test_loss = init.test.total();
  Vector best_params = model.params;
  if (on_epoch) on_epoch(init, model, true);

  nn::AdamState adam = nn::AdamState::zeros(model.params.size());
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    clock = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    LossBreakdown epoch_sum;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += bs) {
      const PairBatch batch = train_pairs.gather(order, begin, std::min(order.size(), begin + bs));
      Tape tape(model.params);
      LossBreakdown terms;
      const Tape::Var loss = build_loss(tape, model, batch, cfg, &terms);
      const double value = tape.scalar(loss);
      if (!std::isfinite(value) || value > cfg.divergence_limit) {
        throw DivergenceError("train: loss " + std::to_string(value) + " at epoch " + std::to_string(epoch) +
                              ", batch " + std::to_string(batches) + ": " + breakdown_to_json(terms).dump());
      }
      tape.backward(loss);
      Vector grad = tape.param_grad();
      if (cfg.grad_clip > 0.0) {
        const double norm = grad.norm();
        if (norm > cfg.grad_clip) grad *= cfg.grad_clip / norm;
      }
      nn::adam_step(model.params, grad, adam, adam_cfg);
      epoch_sum += terms;
      ++batches;
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.lr = adam_cfg.lr;
    m.train = epoch_sum.scaled(1.0 / static_cast<double>(batches));
    m.test = dataset_loss(model, test_pairs, cfg);
    m.test_eval = eval_model(model, test_pairs, cfg.beta);
    m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock).count();
    const bool improved = m.test.total() < result.best_test_loss;
    if (improved) {
      result.best_test_loss = m.test.total();
      result.best_epoch = epoch;
      best_params = model.params;
    }
    result.history.push_back(m);
    if (on_epoch) on_epoch(m, model, improved);
    adam_cfg.lr *= cfg.lr_decay;
  }
  model.params = best_params;
  return result;
}

Vector control_action(const CalibModel& model, const Vector& window) {
  require_dims(window.size() == model.window_size(), "control_action: window length mismatch");
  const Vector wn = model.normalizer.normalize_window(window);
  const Vector g = model.chi.forward(model.params, wn);
  const Vector gc = model.psi.forward(model.params, g);
  const Vector wc = model.eta.forward(model.params, gc);
  const auto sel = model.selectors();
  return model.normalizer.denormalize_inputs(sel.inputs(wc), model.layout->input_indices);
}

Prediction rollout_predicted(const CalibModel& model, const Vector& window_init, int steps) {
  require_dims(window_init.size() == model.window_size(), "rollout_predicted: window length mismatch");
  require(steps >= 0, "rollout_predicted: steps must be nonnegative");
  const int w = model.layout->w_dim;
  Prediction p;
  p.manifest.resize(w, steps + 1);
  Vector g = model.chi.forward(model.params, model.normalizer.normalize_window(window_init));
  for (int j = 0; j <= steps; ++j) {
    if (j > 0) g = model.psi.forward(model.params, g);
    const Vector win = model.normalizer.denormalize_window(model.eta.forward(model.params, g));
    p.manifest.col(j) = win.tail(w);
    p.windows.push_back(win);
  }
  return p;
}

void write_metrics_csv(const std::string& path, const std::vector<EpochMetrics>& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "epoch,lr,seconds";
  for (const char* split : {"train", "test"}) {
    for (const char* term :
         {"recon", "anchor_chi", "anchor_eta", "weave", "inf", "subset", "lyap_anchor", "decay", "total"}) {
      out << ',' << split << '_' << term;
    }
  }
  out << ",test_recon_mse,test_recon_max,test_weave_mse,test_subset_mse,test_violation_rate,test_violation_mean,"
         "chi0_inf,eta0_inf,v_chi0\n";
  for (const auto& m : history) {
    out << m.epoch << ',' << io::format_double(m.lr) << ',' << io::format_double(m.seconds);
    for (const LossBreakdown* b : {&m.train, &m.test}) {
      for (double v : {b->recon, b->anchor_chi, b->anchor_eta, b->weave, b->inf, b->subset, b->lyap_anchor, b->decay,
                       b->total()}) {
        out << ',' << io::format_double(v);
      }
    }
    const auto& e = m.test_eval;
    for (double v : {e.recon_mse, e.recon_max, e.weave_mse, e.subset_mse, e.violation_rate, e.violation_mean,
                     e.chi0_inf, e.eta0_inf, e.v_chi0}) {
      out << ',' << io::format_double(v);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace intrinsic::calib
