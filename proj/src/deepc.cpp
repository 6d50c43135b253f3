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
#include "intrinsic/deepc.hpp"

#include <cmath>

namespace intrinsic::sim {

void DeepcConfig::validate() const {
  require(horizon >= 1, "deepc: horizon must be positive");
  require(q >= 0.0 && r >= 0.0 && q + r > 0.0, "deepc: weights must be non-negative and not both zero");
  require(lambda_g > 0.0, "deepc: lambda_g must be positive");
  require(rank_tol > 0.0 && rank_tol < 1.0, "deepc: rank_tol must lie in (0, 1)");
}

io::json DeepcConfig::to_json() const {
  return {{"horizon", horizon}, {"q", q}, {"r", r}, {"lambda_g", lambda_g},
          {"rank_tol", rank_tol}, {"max_condition", max_condition}};
}

DeepcController::DeepcController(const std::vector<data::Trajectory>& data, const data::SignalLayout& layout, int L,
                                 DeepcConfig cfg)
    : cfg_(cfg), layout_(layout), L_(L) {
  cfg_.validate();
  layout_.validate();
  require(L >= 0, "deepc: L must be non-negative");
  const int w_dim = layout_.w_dim;
  const int depth = L + 1 + cfg_.horizon;
  const Matrix H = data::build_mosaic_hankel(data, depth - 1);
  columns_ = static_cast<int>(H.cols());

  Eigen::BDCSVD<Matrix> svd(H, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  if (!(s.size() > 0 && std::isfinite(s(0)) && s(0) > 0.0)) throw NumericalError("deepc: data matrix is zero or non-finite");
  Eigen::Index r = 0;
  while (r < s.size() && s(r) > cfg_.rank_tol * s(0)) ++r;
  basis_ = svd.matrixU().leftCols(r) * s.head(r).asDiagonal();
  const int past_rows = (L + 1) * w_dim;
  past_ = basis_.topRows(past_rows);
  future_ = basis_.bottomRows(basis_.rows() - past_rows);

  weights_.resize(future_.rows());
  for (int t = 0; t < cfg_.horizon; ++t) {
    for (int i : layout_.output_indices) weights_(t * w_dim + i) = cfg_.q;
    for (int i : layout_.input_indices) weights_(t * w_dim + i) = cfg_.r;
  }
}

DeepcPlan DeepcController::plan(const Vector& past_window) const {
  require_dims(past_window.size() == past_.rows(), "deepc: past window size mismatch");

  // min_a  sum_i weights_i (F a)_i^2 + lambda_g |a|^2   s.t.  P a = w_past
  // Particular solution in the least-squares sense, then optimize over ker P.
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(past_);
  cod.setThreshold(cfg_.rank_tol);
  const Vector a0 = cod.solve(past_window);
  const Eigen::Index rank_p = cod.rank();
  const Eigen::Index r = past_.cols();

  Vector a = a0;
  if (rank_p < r) {
    // ker P from the full SVD of P
    Eigen::JacobiSVD<Matrix> svd(past_, Eigen::ComputeFullV);
    const Matrix N = svd.matrixV().rightCols(r - rank_p);
    const Matrix WF = weights_.asDiagonal() * future_;
    const Matrix A = future_.transpose() * WF + cfg_.lambda_g * Matrix::Identity(r, r);
    const Matrix NtAN = N.transpose() * A * N;
    Eigen::LDLT<Matrix> ldlt(NtAN);
    const Vector d = ldlt.vectorD();
    const double dmax = d.cwiseAbs().maxCoeff();
    const double dmin = d.cwiseAbs().minCoeff();
    if (ldlt.info() != Eigen::Success || !(dmin > 0.0) || dmax / dmin > cfg_.max_condition)
      throw NumericalError("deepc: ill-conditioned reduced problem");
    const Vector z = ldlt.solve(-(N.transpose() * (A * a0)));
    a = a0 + N * z;
  }

  DeepcPlan out;
  out.past_residual = (past_ * a - past_window).norm();
  out.future = future_ * a;
  out.u_first.resize(layout_.u_dim());
  for (int i = 0; i < layout_.u_dim(); ++i)
    out.u_first(i) = out.future(layout_.input_indices[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace intrinsic::sim
