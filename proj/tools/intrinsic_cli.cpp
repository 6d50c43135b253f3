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
// Command-line pipeline: gen-data -> fit-lti -> synth, train-calib ->
// simulate / eval. Every command writes its artifacts plus a resolved-config
// snapshot (<command>.config.json) into the output directory.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>

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
using io::json;

namespace {

enum ExitCode { kOk = 0, kValidation = 2, kInfeasible = 3, kIo = 4 };

std::string default_out_dir() {
  const char* env = std::getenv("INTRINSIC_OUT_DIR");
  return env && *env ? env : ".";
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

void write_snapshot(const fs::path& out, const std::string& command, json cfg) {
  cfg["command"] = command;
  io::write_json_file(out / (command + ".config.json"), cfg);
}

Vector parse_vector(const std::string& text, Eigen::Index expected, const std::string& what) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      vals.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ValidationError(what + ": cannot parse '" + item + "'");
    }
  }
  if (static_cast<Eigen::Index>(vals.size()) != expected)
    throw DimensionMismatch(what + ": expected " + std::to_string(expected) + " comma-separated values");
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

// ---- gen-data ----------------------------------------------------------------

struct GenDataArgs {
  std::string plant = "drone";
  int count = 100;
  int length = 201;
  std::uint64_t seed = 0;
  std::string split = "train";
  bool near_origin = false;
  int hold_min = 0;  // 0 keeps the plant default
  int hold_max = 0;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a) {
  auto plant = sim::make_plant(a.plant);
  sim::GeneratorConfig cfg;
  if (a.plant == "drone") {
    cfg = a.near_origin ? sim::GeneratorConfig::drone_near_origin(a.count, a.length, a.seed)
                        : sim::GeneratorConfig::drone(a.count, a.length, a.seed);
  } else {
    require(!a.near_origin, "--near-origin only applies to the drone");
    cfg = sim::GeneratorConfig::linear(*plant, a.count, a.length, a.seed);
  }
  if (a.hold_min > 0) cfg.hold_min = a.hold_min;
  if (a.hold_max > 0) cfg.hold_max = a.hold_max;
  cfg.split = a.split;
  const auto ds = sim::generate_dataset(*plant, cfg);
  const fs::path out = prepare_out(a.out);
  data::write_dataset(out, ds);
  write_snapshot(out, "gen-data",
                 {{"plant", a.plant}, {"near_origin", a.near_origin}, {"split", a.split}, {"generator", ds.provenance},
                  {"seed", a.seed}});
  std::cout << "wrote " << ds.trajectories.size() << " trajectories of " << a.length << " samples to " << out.string()
            << "\n";
  return kOk;
}

// ---- fit-lti -----------------------------------------------------------------

struct FitLtiArgs {
  std::string data;
  int L = 5;
  int n_B = 0;
  int trajectory = -1;  // -1: all trajectories
  double tol = data::kDefaultRankTol;
  std::string out;
};

int cmd_fit_lti(const FitLtiArgs& a) {
  auto ds = data::read_dataset(a.data);
  if (a.trajectory >= 0) {
    require(static_cast<std::size_t>(a.trajectory) < ds.trajectories.size(), "--trajectory out of range");
    ds.trajectories = {ds.trajectories[static_cast<std::size_t>(a.trajectory)]};
  }
  const Matrix H = data::build_mosaic_hankel(ds.trajectories, a.L);
  const auto rank = data::check_rank(H, a.L, ds.layout->u_dim(), a.n_B, a.tol);
  const data::WindowSelectors sel(a.L, *ds.layout);
  const auto rep = lti::reduce_hankel(H, rank.required, sel, a.tol);

  const fs::path out = prepare_out(a.out);
  json model = lti::rep_to_json(rep);
  model["layout"] = data::layout_to_json(*ds.layout);
  model["rank"] = {{"numerical_rank", rank.numerical_rank}, {"required", rank.required}, {"satisfied", rank.satisfied}};
  io::write_json_file(out / "lti_model.json", model);
  write_snapshot(out, "fit-lti",
                 {{"data", a.data}, {"L", a.L}, {"n_B", a.n_B}, {"trajectory", a.trajectory}, {"tol", a.tol}});
  std::cout << "Hankel " << H.rows() << "x" << H.cols() << ", numerical rank " << rank.numerical_rank
            << ", required " << rank.required << (rank.satisfied ? " (rank condition holds)" : " (rank condition fails)")
            << "\ng_dim " << rep.g_dim << ", sigma_g/sigma_1 = " << rep.singular_values(rep.g_dim - 1) / rep.spectrum(0)
            << "\n";
  return kOk;
}

// ---- synth -------------------------------------------------------------------

struct SynthArgs {
  std::string model;
  double beta = 0.05;
  double eps_pd = 1e-6;
  synth::SolverOptions options;
  bool no_riccati = false;
  std::string sdpa;
  std::string out;
};

int cmd_synth(SynthArgs a) {
  const json model = io::read_json_file(a.model);
  const auto rep = lti::rep_from_json(model);
  a.options.riccati_start = !a.no_riccati;
  const auto prob = synth::assemble(rep, a.beta, a.eps_pd, a.options);
  const fs::path out = prepare_out(a.out);
  if (!a.sdpa.empty()) synth::export_sdpa(prob, a.sdpa);

  const auto res = synth::solve_feasibility(prob);
  json report{{"status", synth::to_string(res.status)},
              {"feasible", res.feasible()},
              {"iterations", res.iterations},
              {"final_margin", res.final_margin},
              {"warm_started", res.warm_started},
              {"residuals", synth::certificate_to_json(res.residuals)}};
  io::write_json_file(out / "synth_report.json", report);
  write_snapshot(out, "synth",
                 {{"model", a.model},
                  {"beta", a.beta},
                  {"eps_pd", a.eps_pd},
                  {"tol", a.options.tol},
                  {"max_iterations", a.options.max_iterations},
                  {"riccati_start", a.options.riccati_start},
                  {"polish_min_y", a.options.polish_min_y},
                  {"seed", a.options.seed}});
  std::cout << "status " << synth::to_string(res.status) << " after " << res.iterations << " iterations\n"
            << "residuals " << report["residuals"].dump() << "\n";
  if (!res.feasible()) {
    std::cout << "Infeasible: no certified controller for beta = " << a.beta << "\n";
    return kInfeasible;
  }
  json ctrl{{"L", rep.L},
            {"w_dim", rep.selectors.w_dim()},
            {"input_indices", rep.selectors.input_indices()},
            {"controller", synth::controller_to_json(*res.controller)}};
  if (model.contains("layout")) ctrl["layout"] = model["layout"];
  io::write_json_file(out / "controller.json", ctrl);
  std::cout << "rho(Psi) = " << res.controller->certificate.spectral_radius << " <= sqrt(1-beta) = "
            << res.controller->certificate.decay_bound << "\n";
  return kOk;
}

// ---- train-calib -------------------------------------------------------------

struct TrainArgs {
  std::string train;
  std::string test;
  int L = 4;
  int n_B = 4;
  calib::Architecture arch;
  calib::TrainConfig cfg;
  std::string out;
};

int cmd_train_calib(const TrainArgs& a) {
  const auto train_set = data::read_dataset(a.train);
  const auto test_set = data::read_dataset(a.test);
  if (!train_set.layout->same_partition(*test_set.layout))
    throw ValidationError("train and test datasets have different layouts");
  std::vector<int> degenerate;
  const auto normalizer = data::fit_normalizer(train_set, train_set.setpoint, &degenerate);
  for (int d : degenerate)
    std::cerr << "warning: component '" << train_set.layout->names[static_cast<std::size_t>(d)]
              << "' is constant in the training data; scale set to 1\n";
  auto model = calib::CalibModel::create(train_set.layout, a.L, a.n_B, normalizer, a.arch, a.cfg.seed);
  const fs::path out = prepare_out(a.out);
  write_snapshot(out, "train-calib",
                 {{"train", a.train},
                  {"test", a.test},
                  {"L", a.L},
                  {"n_B", a.n_B},
                  {"g_dim", model.g_dim},
                  {"architecture",
                   {{"hidden_width", a.arch.hidden_width},
                    {"hidden_layers", a.arch.hidden_layers},
                    {"lyap_width", a.arch.lyap_width},
                    {"lyap_layers", a.arch.lyap_layers},
                    {"a", a.arch.a},
                    {"b", a.arch.b}}},
                  {"train_config", calib::train_config_to_json(a.cfg)}});
  std::cout << "g_dim " << model.g_dim << ", " << model.params.size() << " parameters\n";

  const auto result = calib::train(model, train_set, test_set, a.cfg,
                                   [&](const calib::EpochMetrics& m, const calib::CalibModel& current, bool improved) {
                                     std::cout << "epoch " << m.epoch << "  train " << m.train.total() << "  test "
                                               << m.test.total() << "  recon " << m.test_eval.recon_mse
                                               << "  violations " << m.test_eval.violation_rate
                                               << (improved ? "  *" : "") << std::endl;
                                     if (improved) calib::save_checkpoint(out / "model.ckpt.json", current, a.cfg);
                                   });
  calib::save_checkpoint(out / "model.ckpt.json", model, a.cfg);
  calib::write_metrics_csv((out / "metrics.csv").string(), result.history);
  std::cout << "best epoch " << result.best_epoch << " (test loss " << result.best_test_loss << ")\n";
  return kOk;
}

// ---- simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string plant = "drone";
  std::string controller = "lti";
  std::string model;
  std::string data;  // deepc
  int L = 5;         // deepc
  sim::DeepcConfig deepc;
  std::string init;
  int steps = 300;
  int warmup = -1;  // defaults to L
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  auto plant = sim::make_plant(a.plant);
  const auto& lay = plant->layout();
  const Vector x0 = a.init.empty() ? Vector::Zero(plant->state_dim())
                                   : parse_vector(a.init, plant->state_dim(), "--init");
  sim::ClosedLoopConfig cl;
  cl.steps = a.steps;
  cl.controller_tag = a.controller;
  sim::WindowController controller;
  sim::WindowMonitor monitor;
  std::unique_ptr<calib::CalibModel> calib_model;
  std::unique_ptr<sim::DeepcController> deepc;
  json extra = json::object();

  if (a.controller == "lti") {
    const json j = io::read_json_file(a.model);
    const int L = j.at("L").get<int>();
    if (j.at("w_dim").get<int>() != lay.w_dim || j.at("input_indices").get<std::vector<int>>() != lay.input_indices)
      throw DimensionMismatch("controller layout does not match plant '" + a.plant + "'");
    const auto ctrl = synth::controller_from_json(j.at("controller"));
    require_dims(ctrl.K.rows() == lay.u_dim() && ctrl.K.cols() == (L + 1) * lay.w_dim,
                 "controller gain has the wrong shape");
    cl.L = L;
    controller = [K = ctrl.K](const Vector& w) -> Vector { return K * w; };
    extra["beta"] = ctrl.beta;
  } else if (a.controller == "calib") {
    calib_model = std::make_unique<calib::CalibModel>(calib::load_checkpoint(a.model));
    if (!calib_model->layout->same_partition(lay))
      throw DimensionMismatch("checkpoint layout does not match plant '" + a.plant + "'");
    cl.L = calib_model->L;
    const calib::CalibModel* m = calib_model.get();
    controller = [m](const Vector& w) { return calib::control_action(*m, w); };
    monitor = [m](const Vector& w) {
      const Vector g = m->chi.forward(m->params, m->normalizer.normalize_window(w));
      return m->lyap.forward(m->params, g);
    };
  } else if (a.controller == "deepc") {
    const auto ds = data::read_dataset(a.data);
    if (!ds.layout->same_partition(lay)) throw DimensionMismatch("dataset layout does not match the plant");
    deepc = std::make_unique<sim::DeepcController>(ds.trajectories, lay, a.L, a.deepc);
    cl.L = a.L;
    const sim::DeepcController* d = deepc.get();
    controller = [d](const Vector& w) { return (*d)(w); };
    extra["deepc"] = a.deepc.to_json();
    extra["deepc_rank"] = deepc->rank();
  } else {
    throw ValidationError("--controller must be lti, calib or deepc");
  }
  cl.warmup = a.warmup >= 0 ? a.warmup : cl.L;

  const auto log = sim::run_closed_loop(*plant, controller, x0, cl, monitor);
  const fs::path out = prepare_out(a.out);
  write_log_csv(log, out / ("closed_loop_" + a.controller + ".csv"));

  json snap = cl.to_json();
  snap["plant"] = a.plant;
  snap["model"] = a.model;
  snap["data"] = a.data;
  snap["init"] = io::vector_to_json(x0);
  snap.update(extra);
  write_snapshot(out, "simulate", snap);

  if (calib_model && !log.records.empty() && log.records.size() > static_cast<std::size_t>(cl.warmup + 1)) {
    const auto& first = log.records[static_cast<std::size_t>(cl.warmup + 1)].window;
    const auto pred = calib::rollout_predicted(*calib_model, first, a.steps);
    std::ofstream f(out / "prediction_calib.csv");
    if (!f) throw IoError("cannot write prediction file");
    f << "t";
    for (const auto& n : lay.names) f << ',' << n;
    f << '\n';
    for (Eigen::Index j = 0; j < pred.manifest.cols(); ++j) {
      f << io::format_double((cl.warmup + j) * plant->dt());
      for (Eigen::Index i = 0; i < pred.manifest.rows(); ++i) f << ',' << io::format_double(pred.manifest(i, j));
      f << '\n';
    }
  }

  const Vector last = log.records.empty() ? Vector() : log.records.back().w;
  std::cout << "simulated " << log.records.size() << " samples (" << cl.warmup + 1 << " warmup)";
  if (last.size() > 0) std::cout << ", final sample " << last.transpose();
  std::cout << "\n";
  if (log.aborted) {
    std::cerr << "aborted: " << log.diagnostic << "\n";
    return kInfeasible;
  }
  return kOk;
}

// ---- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  double beta = 0.05;
  std::string model;       // lti model
  std::string controller;  // synth controller
  double eps_pd = 1e-6;
  double tol = 1e-6;
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  const fs::path out = prepare_out(a.out);
  json report = json::object();
  if (!a.checkpoint.empty()) {
    require(!a.data.empty(), "--data is required with --checkpoint");
    calib::TrainConfig cfg;
    const auto model = calib::load_checkpoint(a.checkpoint, &cfg);
    const auto ds = data::read_dataset(a.data);
    if (!ds.layout->same_partition(*model.layout)) throw DimensionMismatch("dataset layout does not match checkpoint");
    const calib::WindowPairs pairs(ds, model.normalizer, model.L);
    report["calib"] = calib::eval_to_json(calib::eval_model(model, pairs, a.beta));
    report["calib"]["loss"] = calib::breakdown_to_json(calib::loss_total(model, pairs.all(), cfg));
  }
  if (!a.controller.empty()) {
    require(!a.model.empty(), "--model is required with --controller");
    const auto rep = lti::rep_from_json(io::read_json_file(a.model));
    const json j = io::read_json_file(a.controller);
    const auto ctrl = synth::controller_from_json(j.at("controller"));
    report["certificate"] = synth::certificate_to_json(synth::verify_certificate(ctrl, rep, ctrl.beta, a.eps_pd, a.tol));
  }
  require(!report.empty(), "nothing to evaluate: pass --checkpoint/--data and/or --model/--controller");
  io::write_json_file(out / "eval_report.json", report);
  write_snapshot(out, "eval",
                 {{"checkpoint", a.checkpoint}, {"data", a.data}, {"beta", a.beta}, {"model", a.model},
                  {"controller", a.controller}, {"eps_pd", a.eps_pd}, {"tol", a.tol}});
  std::cout << report.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intrinsic-state data-driven control pipeline"};
  app.require_subcommand(1);
  const std::string out_default = default_out_dir();

  GenDataArgs gen;
  gen.out = out_default;
  auto* g = app.add_subcommand("gen-data", "Simulate a plant and write a trajectory dataset");
  g->add_option("--plant", gen.plant, "drone, integrator, double-integrator or unstable-scalar")->capture_default_str();
  g->add_option("--count", gen.count)->capture_default_str();
  g->add_option("--length", gen.length, "samples per trajectory")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--split", gen.split)->capture_default_str();
  g->add_flag("--near-origin", gen.near_origin, "small-signal drone data for the linear design");
  g->add_option("--hold-min", gen.hold_min);
  g->add_option("--hold-max", gen.hold_max);
  g->add_option("--out", gen.out)->capture_default_str();

  FitLtiArgs fit;
  fit.out = out_default;
  auto* f = app.add_subcommand("fit-lti", "Build the Hankel matrix and its reduced intrinsic representation");
  f->add_option("--data", fit.data)->required();
  f->add_option("--L", fit.L)->capture_default_str();
  f->add_option("--nB", fit.n_B, "state cardinality")->required();
  f->add_option("--trajectory", fit.trajectory, "use only this trajectory (default: all)");
  f->add_option("--tol", fit.tol)->capture_default_str();
  f->add_option("--out", fit.out)->capture_default_str();

  SynthArgs syn;
  syn.out = out_default;
  auto* s = app.add_subcommand("synth", "Solve the stabilizing-controller feasibility problem");
  s->add_option("--model", syn.model, "lti_model.json from fit-lti")->required();
  s->add_option("--beta", syn.beta)->capture_default_str();
  s->add_option("--eps-pd", syn.eps_pd)->capture_default_str();
  s->add_option("--tol", syn.options.tol, "residual tolerance")->capture_default_str();
  s->add_option("--max-iter", syn.options.max_iterations)->capture_default_str();
  s->add_option("--seed", syn.options.seed)->capture_default_str();
  s->add_flag("--no-riccati", syn.no_riccati, "start the projections from W = I");
  s->add_flag("--polish", syn.options.polish_min_y, "bisect on ||Y|| after a feasible point is found");
  s->add_option("--sdpa", syn.sdpa, "also export the problem in SDPA sparse format");
  s->add_option("--out", syn.out)->capture_default_str();

  TrainArgs tr;
  tr.out = out_default;
  auto* t = app.add_subcommand("train-calib", "Train the CALIB networks");
  t->add_option("--train", tr.train)->required();
  t->add_option("--test", tr.test)->required();
  t->add_option("--L", tr.L)->capture_default_str();
  t->add_option("--nB", tr.n_B)->capture_default_str();
  t->add_option("--epochs", tr.cfg.epochs)->capture_default_str();
  t->add_option("--batch", tr.cfg.batch_size)->capture_default_str();
  t->add_option("--lr", tr.cfg.lr)->capture_default_str();
  t->add_option("--lr-decay", tr.cfg.lr_decay)->capture_default_str();
  t->add_option("--grad-clip", tr.cfg.grad_clip, "max gradient norm per batch, 0 disables")->capture_default_str();
  t->add_option("--beta", tr.cfg.beta)->capture_default_str();
  t->add_option("--lambda-chi", tr.cfg.lambda_chi)->capture_default_str();
  t->add_option("--lambda-eta", tr.cfg.lambda_eta)->capture_default_str();
  t->add_option("--lambda-w", tr.cfg.lambda_w)->capture_default_str();
  t->add_option("--lambda-inf", tr.cfg.lambda_inf)->capture_default_str();
  t->add_option("--lambda-e", tr.cfg.lambda_e)->capture_default_str();
  t->add_option("--lambda-V", tr.cfg.lambda_V)->capture_default_str();
  t->add_option("--lambda-grad", tr.cfg.lambda_grad)->capture_default_str();
  t->add_option("--width", tr.arch.hidden_width)->capture_default_str();
  t->add_option("--depth", tr.arch.hidden_layers)->capture_default_str();
  t->add_option("--lyap-width", tr.arch.lyap_width)->capture_default_str();
  t->add_option("--lyap-depth", tr.arch.lyap_layers)->capture_default_str();
  t->add_option("--seed", tr.cfg.seed)->capture_default_str();
  t->add_option("--out", tr.out)->capture_default_str();

  SimulateArgs sm;
  sm.out = out_default;
  auto* m = app.add_subcommand("simulate", "Run a closed loop and log it as CSV");
  m->add_option("--plant", sm.plant)->capture_default_str();
  m->add_option("--controller", sm.controller, "lti, calib or deepc")->capture_default_str();
  m->add_option("--model", sm.model, "controller.json (lti) or model.ckpt.json (calib)");
  m->add_option("--data", sm.data, "dataset directory for deepc");
  m->add_option("--L", sm.L, "past window depth for deepc")->capture_default_str();
  m->add_option("--horizon", sm.deepc.horizon)->capture_default_str();
  m->add_option("--q", sm.deepc.q)->capture_default_str();
  m->add_option("--r", sm.deepc.r)->capture_default_str();
  m->add_option("--lambda-g", sm.deepc.lambda_g)->capture_default_str();
  m->add_option("--init", sm.init, "initial plant state, comma separated (drone: x,y,z,yaw)");
  m->add_option("--steps", sm.steps)->capture_default_str();
  m->add_option("--warmup", sm.warmup, "setpoint-input samples before the controller starts (default L)");
  m->add_option("--out", sm.out)->capture_default_str();

  EvalArgs ev;
  ev.out = out_default;
  auto* e = app.add_subcommand("eval", "Evaluate a CALIB checkpoint and/or re-verify a synthesized controller");
  e->add_option("--checkpoint", ev.checkpoint);
  e->add_option("--data", ev.data);
  e->add_option("--beta", ev.beta)->capture_default_str();
  e->add_option("--model", ev.model);
  e->add_option("--controller", ev.controller);
  e->add_option("--eps-pd", ev.eps_pd)->capture_default_str();
  e->add_option("--tol", ev.tol)->capture_default_str();
  e->add_option("--out", ev.out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? kOk : kValidation;
  }

  try {
    if (*g) return cmd_gen_data(gen);
    if (*f) return cmd_fit_lti(fit);
    if (*s) return cmd_synth(syn);
    if (*t) return cmd_train_calib(tr);
    if (*m) return cmd_simulate(sm);
    if (*e) return cmd_eval(ev);
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kValidation;
  } catch (const IoError& err) {
    std::cerr << "I/O error: " << err.what() << "\n";
    return kIo;
  } catch (const DivergenceError& err) {
    std::cerr << "diverged: " << err.what() << "\n";
    return kInfeasible;
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kInfeasible;
  } catch (const json::exception& err) {
    std::cerr << "error: malformed artifact: " << err.what() << "\n";
    return kValidation;
  }
  return kValidation;
}
