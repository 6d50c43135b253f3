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
#include "intrinsic/lti_behavior.hpp"

namespace intrinsic::lti {

IntrinsicLtiRep reduce_hankel(const Matrix& H, int g_dim, const data::WindowSelectors& selectors,
                              double tol) {
  require(H.size() > 0, "reduce_hankel: empty matrix");
  require_dims(H.rows() == selectors.window_size(), "reduce_hankel: row count is not (L+1) w_dim");
  require(g_dim > 0 && g_dim <= std::min<Eigen::Index>(H.rows(), H.cols()),
          "reduce_hankel: g_dim exceeds matrix dimensions");

  Eigen::BDCSVD<Matrix> svd(H, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  if (!(s(g_dim - 1) > tol * s(0))) {
    throw NumericalError("reduce_hankel: rank deficient, sigma_" + std::to_string(g_dim) + "/sigma_1 = " +
                         std::to_string(s(0) > 0 ? s(g_dim - 1) / s(0) : 0.0));
  }

  IntrinsicLtiRep rep;
  rep.L = selectors.L();
  rep.g_dim = g_dim;
  rep.selectors = selectors;
  rep.spectrum = s;
  rep.singular_values = s.head(g_dim);
  const auto U = svd.matrixU().leftCols(g_dim);
  rep.H_r = U * rep.singular_values.asDiagonal();
  rep.H_pinv = rep.singular_values.cwiseInverse().asDiagonal() * U.transpose();
  return rep;
}

IntrinsicLtiRep fit_lti(const data::Trajectory& traj, int L, int n_B, double tol) {
  require(traj.layout != nullptr, "fit_lti: trajectory has no layout");
  const data::WindowSelectors sel(L, *traj.layout);
  const int g_dim = (L + 1) * sel.u_dim() + n_B;
  return reduce_hankel(data::build_hankel(traj, L), g_dim, sel, tol);
}

IntrinsicLtiRep fit_lti(const data::TrajectoryDataset& ds, int L, int n_B, double tol) {
  ds.validate();
  const data::WindowSelectors sel(L, *ds.layout);
  const int g_dim = (L + 1) * sel.u_dim() + n_B;
  return reduce_hankel(data::build_mosaic_hankel(ds.trajectories, L), g_dim, sel, tol);
}

Vector chi(const IntrinsicLtiRep& rep, const Vector& window) {
  require_dims(window.size() == rep.H_pinv.cols(), "chi: window length mismatch");
  return rep.H_pinv * window;
}

Vector eta(const IntrinsicLtiRep& rep, const Vector& g) {
  require_dims(g.size() == rep.g_dim, "eta: state dimension mismatch");
  return rep.H_r * g;
}

Vector weaving_residual(const IntrinsicLtiRep& rep, const Vector& g_k, const Vector& g_km1) {
  require_dims(g_k.size() == rep.g_dim && g_km1.size() == rep.g_dim,
               "weaving_residual: state dimension mismatch");
  const auto n = rep.selectors.shift_size();
  return rep.H_r.topRows(n) * g_k - rep.H_r.bottomRows(n) * g_km1;
}

io::json rep_to_json(const IntrinsicLtiRep& rep) {
  return {{"L", rep.L},
          {"g_dim", rep.g_dim},
          {"w_dim", rep.selectors.w_dim()},
          {"input_indices", rep.selectors.input_indices()},
          {"H_r", io::matrix_to_json(rep.H_r)},
          {"singular_values", io::vector_to_json(rep.singular_values)},
          {"spectrum", io::vector_to_json(rep.spectrum)}};
}

IntrinsicLtiRep rep_from_json(const io::json& j) {
  IntrinsicLtiRep rep;
  try {
    rep.L = j.at("L").get<int>();
    rep.g_dim = j.at("g_dim").get<int>();
    const int w_dim = j.at("w_dim").get<int>();
    rep.selectors = data::WindowSelectors(rep.L, w_dim, j.at("input_indices").get<std::vector<int>>());
    rep.H_r = io::matrix_from_json(j.at("H_r"));
    rep.singular_values = io::vector_from_json(j.at("singular_values"));
    if (j.contains("spectrum")) rep.spectrum = io::vector_from_json(j.at("spectrum"));
  } catch (const io::json::exception& e) {
    throw ValidationError(std::string("lti model: ") + e.what());
  }
  require_dims(rep.H_r.rows() == rep.selectors.window_size() && rep.H_r.cols() == rep.g_dim,
               "lti model: H_r has the wrong shape");
  // H_r = U diag(sigma); its left inverse follows from the normal equations.
  rep.H_pinv = (rep.H_r.transpose() * rep.H_r).ldlt().solve(rep.H_r.transpose());
  return rep;
}

}  // namespace intrinsic::lti
