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
#include <filesystem>
#include <optional>
#include <string>

#include "intrinsic/lti_behavior.hpp"

namespace intrinsic::synth {

struct SolverOptions {
  int max_iterations = 50000;
  // Certificate tolerance on every residual.
  double tol = 1e-6;
  // The PSD blocks are projected onto {S >= margin I}. The margin starts here
  // and shrinks tenfold whenever progress stalls.
  double initial_margin = 1e-1;
  double min_margin = 1e-9;
  int stall_window = 400;
  double stall_ratio = 1e-3;
  // Optional post-pass that bisects on ||Y||_F. Off by default.
  bool polish_min_y = false;
  // Seed the iteration with a point built from a rate-discounted Riccati
  // equation on the free part of Psi. Without it the projections start at
  // W = I, Y = 0.
  bool riccati_start = true;
  int polish_steps = 12;
  std::uint64_t seed = 0;
};

// Find W = W^T >= eps_pd I and Y with
//   Pi_- H_r Y - Pi_+ H_r W = 0,
//   [[(1-beta) W, Y^T], [Y, W]] >= 0.
struct StabilizationProblem {
  lti::IntrinsicLtiRep rep;
  double beta = 0.05;
  double eps_pd = 1e-6;
  SolverOptions options;
};

struct CertificateReport {
  double w_min_eig = 0.0;         // lambda_min(W), must be >= eps_pd
  double weaving_residual = 0.0;  // ||Pi_- H_r Y - Pi_+ H_r W||_inf
  double lmi_min_eig = 0.0;       // lambda_min of the decay block, must be >= -tol
  double subset_residual = 0.0;   // ||Pi_- H_r Psi - Pi_+ H_r||_inf
  double span_residual = 0.0;     // ||(I - H_r H_pinv) H_r Psi||_F
  double spectral_radius = 0.0;   // rho(Psi)
  double max_decay_ratio = 0.0;   // worst ||g_k||_M / ||g_{k-1}||_M over sampled rollouts
  double decay_bound = 0.0;       // sqrt(1 - beta)
  bool passed = false;
};

struct StabilizedController {
  double beta = 0.0;
  Matrix W;
  Matrix Y;
  Matrix Psi;  // Y W^-1
  Matrix K;    // u_k = K w_{k-1}, u_dim x (L+1) w_dim
  CertificateReport certificate;
};

enum class SolveStatus { kFeasible, kMaxIterations, kMarginExhausted };

std::string to_string(SolveStatus s);

struct SynthesisResult {
  SolveStatus status = SolveStatus::kMaxIterations;
  std::optional<StabilizedController> controller;  // set iff feasible
  CertificateReport residuals;                      // best iterate when infeasible
  int iterations = 0;
  double final_margin = 0.0;
  bool warm_started = false;  // iteration began at the Riccati point

  bool feasible() const { return controller.has_value(); }
};

StabilizationProblem assemble(const lti::IntrinsicLtiRep& rep, double beta, double eps_pd = 1e-6,
                              SolverOptions options = {});

// Alternating projections between the affine constraint set and the PSD cones.
// Failure to converge is reported, never certified as infeasibility.
SynthesisResult solve_feasibility(const StabilizationProblem& prob);

// Discounted LQR construction: with Psi = Psi0 + N K, where Psi0 solves the
// subset condition and N spans ker(Pi_- H_r), the stabilizing DARE solution P of
// (Psi0, N) / sqrt(1 - beta) gives W = P^-1 (trace-normalized) and Y = Psi W.
// Returns nullopt when the subset condition has no solution or the scaled pair
// is not stabilizable.
struct RiccatiPoint {
  Matrix W;
  Matrix Y;
};
std::optional<RiccatiPoint> riccati_point(const lti::IntrinsicLtiRep& rep, double beta);

// Throws NumericalError when cond(W) > 1e12.
StabilizedController extract_controller(const Matrix& W, const Matrix& Y, const lti::IntrinsicLtiRep& rep,
                                        double beta);

CertificateReport verify_certificate(const StabilizedController& ctrl, const lti::IntrinsicLtiRep& rep,
                                     double beta, double eps_pd = 1e-6, double tol = 1e-6,
                                     std::uint64_t seed = 0);

// Windows of the controlled behavior w_k = H_r Psi H_pinv w_{k-1}; element 0 is w0.
std::vector<Vector> simulate_windows(const lti::IntrinsicLtiRep& rep, const Matrix& Psi, const Vector& w0,
                                     int steps);

// Writes the feasibility problem in SDPA sparse format (.dat-s) so it can be
// handed to an external conic solver. Unknowns are the upper triangle of W
// (row-major) followed by Y (row-major); equalities appear as a pair of LP
// blocks.
void export_sdpa(const StabilizationProblem& prob, const std::filesystem::path& file);

io::json controller_to_json(const StabilizedController& ctrl);
StabilizedController controller_from_json(const io::json& j);
io::json certificate_to_json(const CertificateReport& r);

}  // namespace intrinsic::synth
