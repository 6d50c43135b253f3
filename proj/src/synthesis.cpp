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
#include "intrinsic/synthesis.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace intrinsic::synth {

namespace {

double min_eig(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Matrix decay_block(const Matrix& W, const Matrix& Y, double beta) {
  const auto g = W.rows();
  Matrix S(2 * g, 2 * g);
  S.topLeftCorner(g, g) = (1.0 - beta) * W;
  S.topRightCorner(g, g) = Y.transpose();
  S.bottomLeftCorner(g, g) = Y;
  S.bottomRightCorner(g, g) = W;
  return S;
}

// Symmetric eigenvalue clipping onto {S >= floor I}. Returns the distance moved.
double clip_psd(Matrix& S, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (S + S.transpose()));
  Vector d = es.eigenvalues();
  if (d(0) >= floor) return 0.0;
  const Vector clipped = d.cwiseMax(floor);
  const double moved = (clipped - d).norm();
  S = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
  return moved;
}

// Decision vector x = [upper triangle of W (row-major); Y (row-major)].
class VariableMap {
 public:
  explicit VariableMap(int g) : g_(g), n_w_(g * (g + 1) / 2) {}

  int g() const { return g_; }
  int n_w() const { return n_w_; }
  int size() const { return n_w_ + g_ * g_; }

  int w_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    return i * g_ - i * (i - 1) / 2 + (j - i);
  }
  int y_index(int i, int j) const { return n_w_ + i * g_ + j; }

  void unpack(const Vector& x, Matrix& W, Matrix& Y) const {
    W.resize(g_, g_);
    Y.resize(g_, g_);
    for (int i = 0; i < g_; ++i) {
      for (int j = i; j < g_; ++j) W(i, j) = W(j, i) = x(w_index(i, j));
      for (int j = 0; j < g_; ++j) Y(i, j) = x(y_index(i, j));
    }
  }

  Vector pack(const Matrix& W, const Matrix& Y) const {
    Vector x(size());
    for (int i = 0; i < g_; ++i) {
      for (int j = i; j < g_; ++j) x(w_index(i, j)) = 0.5 * (W(i, j) + W(j, i));
      for (int j = 0; j < g_; ++j) x(y_index(i, j)) = Y(i, j);
    }
    return x;
  }

 private:
  int g_;
  int n_w_;
};

// Rows of Pi_- H_r Y - Pi_+ H_r W = 0, one per entry (r, c).
Matrix weaving_constraints(const VariableMap& vars, const Matrix& A, const Matrix& B) {
  const int g = vars.g();
  const auto n_s = A.rows();
  Matrix C = Matrix::Zero(n_s * g, vars.size());
  for (Eigen::Index r = 0; r < n_s; ++r) {
    for (int c = 0; c < g; ++c) {
      const auto row = r * g + c;
      for (int k = 0; k < g; ++k) {
        C(row, vars.y_index(k, c)) += A(r, k);
        C(row, vars.w_index(k, c)) -= B(r, k);
      }
    }
  }
  return C;
}

// Projection machinery for the product-space formulation
//   z = (W, Y, S1, S2), affine set: weaving, tr W = g, S1 = W - eps I, S2 = block(W, Y)
//   cone set: S1 >= margin I, S2 >= margin I.
class AlternatingProjections {
 public:
  AlternatingProjections(const StabilizationProblem& prob)
      : prob_(prob), vars_(prob.rep.g_dim), g_(prob.rep.g_dim) {
    const int g = g_;
    const auto n_s = prob.rep.selectors.shift_size();
    const Matrix A = prob.rep.H_r.topRows(n_s);
    const Matrix B = prob.rep.H_r.bottomRows(n_s);
    A_ = A;
    B_ = B;

    Matrix C(n_s * g + 1, vars_.size());
    C.topRows(n_s * g) = weaving_constraints(vars_, A, B);
    C.row(n_s * g).setZero();
    for (int i = 0; i < g; ++i) C(n_s * g, vars_.w_index(i, i)) = 1.0;
    Vector d = Vector::Zero(C.rows());
    d(n_s * g) = g;

    Eigen::BDCSVD<Matrix> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    int rank = 0;
    while (rank < s.size() && s(rank) > 1e-11 * s(0)) ++rank;
    const Matrix& V = svd.matrixV();
    const Matrix N = V.rightCols(vars_.size() - rank);
    const Vector x_p = V.leftCols(rank) *
                       (s.head(rank).cwiseInverse().asDiagonal() * (svd.matrixU().leftCols(rank).transpose() * d));

    const int m = 7 * g * g;
    Matrix G(m, vars_.size());
    for (int col = 0; col < vars_.size(); ++col) G.col(col) = lift(Vector::Unit(vars_.size(), col));
    const Matrix GN = G * N;
    const Matrix normal = GN.transpose() * GN;
    R_ = N * normal.ldlt().solve(GN.transpose());
    r0_ = x_p - R_ * (G * x_p);
  }

  const VariableMap& vars() const { return vars_; }

  // Lifts x to (vec W, vec Y, vec W, vec block(W, Y)), all column-major.
  Vector lift(const Vector& x) const {
    Matrix W, Y;
    vars_.unpack(x, W, Y);
    return stack(W, Y, W, decay_block(W, Y, prob_.beta));
  }

  Vector project_affine(const Matrix& W, const Matrix& Y, const Matrix& S1, const Matrix& S2) const {
    const Matrix S1_shifted = S1 + prob_.eps_pd * Matrix::Identity(g_, g_);
    return r0_ + R_ * stack(W, Y, S1_shifted, S2);
  }

  double weaving_residual(const Matrix& W, const Matrix& Y) const {
    return (A_ * Y - B_ * W).cwiseAbs().maxCoeff();
  }

 private:
  Vector stack(const Matrix& W, const Matrix& Y, const Matrix& S1, const Matrix& S2) const {
    const auto gg = static_cast<Eigen::Index>(g_) * g_;
    Vector t(7 * gg);
    t.segment(0, gg) = Eigen::Map<const Vector>(W.data(), gg);
    t.segment(gg, gg) = Eigen::Map<const Vector>(Y.data(), gg);
    t.segment(2 * gg, gg) = Eigen::Map<const Vector>(S1.data(), gg);
    t.segment(3 * gg, 4 * gg) = Eigen::Map<const Vector>(S2.data(), 4 * gg);
    return t;
  }

  const StabilizationProblem& prob_;
  VariableMap vars_;
  int g_;
  Matrix A_;
  Matrix B_;
  Matrix R_;
  Vector r0_;
};

struct ApRun {
  bool feasible = false;
  Vector x;
  int iterations = 0;
  double margin = 0.0;
  bool exhausted = false;
  CertificateReport best;
};

// Runs alternating projections from x. When y_radius is set, Y is also kept
// inside the Frobenius ball of that radius.
ApRun run_ap(const AlternatingProjections& ap, const StabilizationProblem& prob, Vector x, double margin,
             int max_iterations, std::optional<double> y_radius) {
  const auto& opt = prob.options;
  const int g = prob.rep.g_dim;
  ApRun run;
  run.margin = margin;
  double best_score = -std::numeric_limits<double>::infinity();
  double window_gap = std::numeric_limits<double>::infinity();
  Matrix W, Y;
  for (int it = 0; it < max_iterations; ++it) {
    ap.vars().unpack(x, W, Y);
    Matrix S1 = W - prob.eps_pd * Matrix::Identity(g, g);
    Matrix S2 = decay_block(W, Y, prob.beta);
    const double w_min = min_eig(W);
    const double lmi_min = min_eig(S2);
    const double weave = ap.weaving_residual(W, Y);
    const bool in_ball = !y_radius || Y.norm() <= *y_radius * (1.0 + 1e-9);
    const double score = std::min(w_min - prob.eps_pd, lmi_min);
    if (score > best_score) {
      best_score = score;
      run.best.w_min_eig = w_min;
      run.best.lmi_min_eig = lmi_min;
      run.best.weaving_residual = weave;
      run.best.decay_bound = std::sqrt(1.0 - prob.beta);
    }
    run.iterations = it;
    if (w_min >= prob.eps_pd && lmi_min >= 0.0 && weave <= opt.tol && in_ball) {
      run.feasible = true;
      run.x = x;
      return run;
    }

    double gap2 = 0.0;
    const double m1 = clip_psd(S1, margin);
    const double m2 = clip_psd(S2, margin);
    gap2 += m1 * m1 + m2 * m2;
    if (y_radius) {
      const double n = Y.norm();
      if (n > *y_radius) {
        gap2 += (n - *y_radius) * (n - *y_radius);
        Y *= *y_radius / n;
      }
    }
    x = ap.project_affine(W, Y, S1, S2);

    const double gap = std::sqrt(gap2);
    if (it % opt.stall_window == 0) {
      if (it > 0 && gap > (1.0 - opt.stall_ratio) * window_gap) {
        margin *= 0.1;
        if (margin < opt.min_margin) {
          run.exhausted = true;
          break;
        }
        window_gap = std::numeric_limits<double>::infinity();
      } else {
        window_gap = gap;
      }
    }
  }
  run.x = x;
  run.margin = margin;
  return run;
}

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kFeasible: return "feasible";
    case SolveStatus::kMaxIterations: return "max_iterations";
    case SolveStatus::kMarginExhausted: return "margin_exhausted";
  }
  return "unknown";
}

StabilizationProblem assemble(const lti::IntrinsicLtiRep& rep, double beta, double eps_pd, SolverOptions options) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ValidationError("assemble: beta must lie in (0, 1]");
  if (!(eps_pd > 0.0)) throw ValidationError("assemble: eps_pd must be positive");
  require(rep.g_dim > 0 && rep.H_r.cols() == rep.g_dim, "assemble: invalid representation");
  StabilizationProblem prob;
  prob.rep = rep;
  prob.beta = beta;
  prob.eps_pd = eps_pd;
  prob.options = options;
  return prob;
}

SynthesisResult solve_feasibility(const StabilizationProblem& prob) {
  const int g = prob.rep.g_dim;
  const auto& opt = prob.options;
  AlternatingProjections ap(prob);

  SynthesisResult result;
  Vector x0;
  std::optional<RiccatiPoint> seed;
  if (opt.riccati_start) seed = riccati_point(prob.rep, prob.beta);
  if (seed) {
    x0 = ap.vars().pack(seed->W, seed->Y);
    result.warm_started = true;
  } else {
    // W = I, Y = 0 pulled onto the affine set.
    const Matrix I = Matrix::Identity(g, g);
    const Matrix Z = Matrix::Zero(g, g);
    x0 = ap.project_affine(I, Z, I - prob.eps_pd * I, decay_block(I, Z, prob.beta));
  }

  ApRun run = run_ap(ap, prob, x0, opt.initial_margin, opt.max_iterations, std::nullopt);
  result.iterations = run.iterations;
  result.final_margin = run.margin;
  result.residuals = run.best;
  if (!run.feasible) {
    result.status = run.exhausted ? SolveStatus::kMarginExhausted : SolveStatus::kMaxIterations;
    return result;
  }

  Matrix W, Y;
  ap.vars().unpack(run.x, W, Y);

  if (opt.polish_min_y) {
    double lo = 0.0;
    double hi = Y.norm();
    Vector best = run.x;
    for (int step = 0; step < opt.polish_steps; ++step) {
      const double mid = 0.5 * (lo + hi);
      ApRun p = run_ap(ap, prob, best, run.margin, std::max(1, opt.max_iterations / opt.polish_steps), mid);
      result.iterations += p.iterations;
      if (p.feasible) {
        hi = mid;
        best = p.x;
      } else {
        lo = mid;
      }
    }
    ap.vars().unpack(best, W, Y);
  }

  StabilizedController ctrl = extract_controller(W, Y, prob.rep, prob.beta);
  ctrl.certificate = verify_certificate(ctrl, prob.rep, prob.beta, prob.eps_pd, opt.tol, opt.seed);
  result.residuals = ctrl.certificate;
  if (!ctrl.certificate.passed) {
    result.status = SolveStatus::kMaxIterations;
    return result;
  }
  result.status = SolveStatus::kFeasible;
  result.controller = std::move(ctrl);
  return result;
}

std::optional<RiccatiPoint> riccati_point(const lti::IntrinsicLtiRep& rep, double beta) {
  const int g = rep.g_dim;
  const auto n_s = rep.selectors.shift_size();
  const Matrix A = rep.H_r.topRows(n_s);
  const Matrix B = rep.H_r.bottomRows(n_s);

  // On exact LTI data Pi_- H_r spans B_{L-1} and has rank g_dim - u_dim; its
  // kernel is the free input in the last slot. Truncating to that rank gives
  // the least-squares Psi0 when the data is only approximately LTI.
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const Eigen::Index m = rep.u_dim();
  const Eigen::Index r = g - m;
  if (r <= 0 || !(sv(r - 1) > 1e-10 * sv(0))) return std::nullopt;
  const Matrix Psi0 = svd.matrixV().leftCols(r) *
                      (sv.head(r).cwiseInverse().asDiagonal() * (svd.matrixU().leftCols(r).transpose() * B));
  const Matrix N = svd.matrixV().rightCols(m);

  // Structured doubling on the scaled pair with Q = I, R = I.
  const double s = std::sqrt(1.0 - beta);
  const Matrix I = Matrix::Identity(g, g);
  Matrix Ak = Psi0 / s;
  Matrix Gk = (N / s) * (N / s).transpose();
  Matrix Hk = I;
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    const Eigen::PartialPivLU<Matrix> lu(I + Gk * Hk);
    const Matrix AinvA = lu.solve(Ak);
    const Matrix H_next = Hk + Ak.transpose() * Hk * AinvA;
    const Matrix G_next = Gk + Ak * lu.solve(Gk) * Ak.transpose();
    Ak = Ak * AinvA;
    const double change = (H_next - Hk).norm() / H_next.norm();
    Hk = 0.5 * (H_next + H_next.transpose());
    Gk = 0.5 * (G_next + G_next.transpose());
    if (!Hk.allFinite() || Hk.norm() > 1e14) return std::nullopt;
    if (change < 1e-14) {
      converged = true;
      break;
    }
  }
  if (!converged) return std::nullopt;

  const Matrix& P = Hk;
  const Matrix Bs = N / s;
  const Matrix Ks = -(Matrix::Identity(m, m) + Bs.transpose() * P * Bs).ldlt().solve(Bs.transpose() * P * (Psi0 / s));
  const Matrix Psi = Psi0 + N * Ks;

  Eigen::LDLT<Matrix> p_ldlt(P);
  if (p_ldlt.info() != Eigen::Success || !(p_ldlt.vectorD().minCoeff() > 0.0)) return std::nullopt;
  Matrix W = p_ldlt.solve(I);
  W = 0.5 * (W + W.transpose());
  W *= g / W.trace();
  RiccatiPoint out;
  out.W = W;
  out.Y = Psi * W;
  return out;
}

StabilizedController extract_controller(const Matrix& W, const Matrix& Y, const lti::IntrinsicLtiRep& rep,
                                        double beta) {
  require_dims(W.rows() == rep.g_dim && W.cols() == rep.g_dim && Y.rows() == rep.g_dim &&
                   Y.cols() == rep.g_dim,
               "extract_controller: W and Y must be g_dim x g_dim");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(rep.g_dim - 1);
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw NumericalError("extract_controller: W is numerically singular (cond " +
                         std::to_string(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) + ")");
  }
  StabilizedController ctrl;
  ctrl.beta = beta;
  ctrl.W = W;
  ctrl.Y = Y;
  // Psi = Y W^-1 = (W^-1 Y^T)^T since W is symmetric.
  ctrl.Psi = W.ldlt().solve(Y.transpose()).transpose();
  ctrl.K = rep.selectors.input_rows_of(rep.H_r * ctrl.Psi * rep.H_pinv);
  return ctrl;
}

CertificateReport verify_certificate(const StabilizedController& ctrl, const lti::IntrinsicLtiRep& rep, double beta,
                                     double eps_pd, double tol, std::uint64_t seed) {
  CertificateReport r;
  const auto n_s = rep.selectors.shift_size();
  const Matrix A = rep.H_r.topRows(n_s);
  const Matrix B = rep.H_r.bottomRows(n_s);
  const int g = rep.g_dim;

  r.w_min_eig = min_eig(0.5 * (ctrl.W + ctrl.W.transpose()));
  r.weaving_residual = (A * ctrl.Y - B * ctrl.W).cwiseAbs().maxCoeff();
  r.lmi_min_eig = min_eig(decay_block(0.5 * (ctrl.W + ctrl.W.transpose()), ctrl.Y, beta));
  r.subset_residual = (A * ctrl.Psi - B).cwiseAbs().maxCoeff();
  const Matrix HPsi = rep.H_r * ctrl.Psi;
  r.span_residual = (HPsi - rep.H_r * (rep.H_pinv * HPsi)).norm();
  r.spectral_radius = ctrl.Psi.eigenvalues().cwiseAbs().maxCoeff();
  r.decay_bound = std::sqrt(1.0 - beta);

  // Sampled M-norm contraction, M = W^-1.
  const auto W_ldlt = ctrl.W.ldlt();
  auto m_norm = [&](const Vector& v) { return std::sqrt(std::max(0.0, v.dot(W_ldlt.solve(v)))); };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  r.max_decay_ratio = 0.0;
  for (int s = 0; s < 32; ++s) {
    Vector v(g);
    for (int i = 0; i < g; ++i) v(i) = normal(rng);
    for (int k = 0; k < 40; ++k) {
      const double before = m_norm(v);
      if (before < 1e-150) break;
      v = ctrl.Psi * v;
      r.max_decay_ratio = std::max(r.max_decay_ratio, m_norm(v) / before);
      v /= before;
    }
  }

  r.passed = r.w_min_eig >= eps_pd * (1.0 - 1e-9) && r.weaving_residual <= tol && r.lmi_min_eig >= -tol &&
             r.subset_residual <= tol && r.max_decay_ratio <= r.decay_bound + 1e-8;
  return r;
}

std::vector<Vector> simulate_windows(const lti::IntrinsicLtiRep& rep, const Matrix& Psi, const Vector& w0,
                                     int steps) {
  require_dims(w0.size() == rep.window_size(), "simulate_windows: window length mismatch");
  const Matrix T = rep.H_r * Psi * rep.H_pinv;
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(steps) + 1);
  out.push_back(w0);
  for (int k = 0; k < steps; ++k) out.push_back(T * out.back());
  return out;
}

void export_sdpa(const StabilizationProblem& prob, const std::filesystem::path& file) {
  const int g = prob.rep.g_dim;
  const VariableMap vars(g);
  const auto n_s = prob.rep.selectors.shift_size();
  const Matrix C = weaving_constraints(vars, prob.rep.H_r.topRows(n_s), prob.rep.H_r.bottomRows(n_s));
  const auto n_eq = C.rows();

  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << "\"stabilizing controller feasibility: W >= eps I, decay LMI, weaving equalities\"\n";
  out << vars.size() << "\n3\n" << g << ' ' << 2 * g << ' ' << -2 * n_eq << '\n';
  for (int i = 0; i < vars.size(); ++i) out << (i ? " " : "") << 0;
  out << '\n';
  auto entry = [&](int mat, int blk, long i, long j, double v) {
    if (v == 0.0) return;
    if (i > j) std::swap(i, j);
    out << mat << ' ' << blk << ' ' << i + 1 << ' ' << j + 1 << ' ' << io::format_double(v) << '\n';
  };
  // F0: eps I in block 1, constraint offsets (zero) in block 3.
  for (int i = 0; i < g; ++i) entry(0, 1, i, i, prob.eps_pd);
  for (int a = 0; a < g; ++a) {
    for (int b = a; b < g; ++b) {
      const int mat = vars.w_index(a, b) + 1;
      entry(mat, 1, a, b, 1.0);
      entry(mat, 2, a, b, 1.0 - prob.beta);
      entry(mat, 2, g + a, g + b, 1.0);
    }
  }
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) entry(vars.y_index(i, j) + 1, 2, j, g + i, 1.0);
  }
  for (Eigen::Index r = 0; r < n_eq; ++r) {
    for (int c = 0; c < vars.size(); ++c) {
      if (C(r, c) == 0.0) continue;
      entry(c + 1, 3, 2 * r, 2 * r, C(r, c));
      entry(c + 1, 3, 2 * r + 1, 2 * r + 1, -C(r, c));
    }
  }
  if (!out) throw IoError("write failed for " + file.string());
}

io::json certificate_to_json(const CertificateReport& r) {
  return {{"w_min_eig", r.w_min_eig},
          {"weaving_residual", r.weaving_residual},
          {"lmi_min_eig", r.lmi_min_eig},
          {"subset_residual", r.subset_residual},
          {"span_residual", r.span_residual},
          {"spectral_radius", r.spectral_radius},
          {"max_decay_ratio", r.max_decay_ratio},
          {"decay_bound", r.decay_bound},
          {"passed", r.passed}};
}

io::json controller_to_json(const StabilizedController& ctrl) {
  return {{"beta", ctrl.beta},
          {"W", io::matrix_to_json(ctrl.W)},
          {"Y", io::matrix_to_json(ctrl.Y)},
          {"Psi", io::matrix_to_json(ctrl.Psi)},
          {"K", io::matrix_to_json(ctrl.K)},
          {"residuals", certificate_to_json(ctrl.certificate)}};
}

StabilizedController controller_from_json(const io::json& j) {
  StabilizedController ctrl;
  try {
    ctrl.beta = j.at("beta").get<double>();
    ctrl.W = io::matrix_from_json(j.at("W"));
    ctrl.Y = io::matrix_from_json(j.at("Y"));
    ctrl.Psi = io::matrix_from_json(j.at("Psi"));
    ctrl.K = io::matrix_from_json(j.at("K"));
    if (j.contains("residuals")) {
      const auto& r = j.at("residuals");
      auto& c = ctrl.certificate;
      c.w_min_eig = r.value("w_min_eig", 0.0);
      c.weaving_residual = r.value("weaving_residual", 0.0);
      c.lmi_min_eig = r.value("lmi_min_eig", 0.0);
      c.subset_residual = r.value("subset_residual", 0.0);
      c.span_residual = r.value("span_residual", 0.0);
      c.spectral_radius = r.value("spectral_radius", 0.0);
      c.max_decay_ratio = r.value("max_decay_ratio", 0.0);
      c.decay_bound = r.value("decay_bound", 0.0);
      c.passed = r.value("passed", false);
    }
  } catch (const io::json::exception& e) {
    throw ValidationError(std::string("controller: ") + e.what());
  }
  return ctrl;
}

}  // namespace intrinsic::synth
