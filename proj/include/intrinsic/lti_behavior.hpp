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

#include <filesystem>

#include "intrinsic/behavior_data.hpp"
#include "intrinsic/json_matrix.hpp"

namespace intrinsic::lti {

// Leading-SVD chart of an LTI restricted behavior.
//
// H_r = U_g diag(sigma_g) spans the behavior on windows of depth L and
// H_pinv = diag(sigma_g)^-1 U_g^T is its left inverse, so the intrinsic
// state of a window is g = H_pinv w and the window of a state is H_r g.
struct IntrinsicLtiRep {
  Matrix H_r;     // (L+1) w_dim x g_dim
  Matrix H_pinv;  // g_dim x (L+1) w_dim
  int L = 0;
  int g_dim = 0;
  data::WindowSelectors selectors;
  Vector singular_values;  // retained part of the spectrum
  Vector spectrum;         // full spectrum of the source matrix, for order selection

  int window_size() const { return selectors.window_size(); }
  int u_dim() const { return selectors.u_dim(); }
};

// Keeps the g_dim leading singular triplets of H. Throws NumericalError when
// sigma_{g_dim} <= tol * sigma_1.
IntrinsicLtiRep reduce_hankel(const Matrix& H, int g_dim, const data::WindowSelectors& selectors,
                              double tol = data::kDefaultRankTol);

// Convenience: Hankel of a trajectory, g_dim = (L+1) u_dim + n_B.
IntrinsicLtiRep fit_lti(const data::Trajectory& traj, int L, int n_B,
                        double tol = data::kDefaultRankTol);

// Same over every trajectory of a dataset (mosaic Hankel).
IntrinsicLtiRep fit_lti(const data::TrajectoryDataset& ds, int L, int n_B,
                        double tol = data::kDefaultRankTol);

Vector chi(const IntrinsicLtiRep& rep, const Vector& window);
Vector eta(const IntrinsicLtiRep& rep, const Vector& g);

// Pi_- H_r g_k - Pi_+ H_r g_km1; zero exactly on admissible transitions.
Vector weaving_residual(const IntrinsicLtiRep& rep, const Vector& g_k, const Vector& g_km1);

io::json rep_to_json(const IntrinsicLtiRep& rep);
IntrinsicLtiRep rep_from_json(const io::json& j);

}  // namespace intrinsic::lti
