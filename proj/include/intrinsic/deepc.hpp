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

#include <vector>

#include "intrinsic/behavior_data.hpp"
#include "intrinsic/json_matrix.hpp"

namespace intrinsic::sim {

struct DeepcConfig {
  int horizon = 10;
  double q = 1.0;          // weight on future outputs
  double r = 0.1;          // weight on future inputs
  double lambda_g = 1e-3;  // ridge on the column combination
  double rank_tol = 1e-10;
  double max_condition = 1e12;

  void validate() const;
  io::json to_json() const;
};

struct DeepcPlan {
  Vector u_first;
  Vector future;          // horizon * w_dim, time-major
  double past_residual;   // || H_p g - w_past ||
};

// Receding-horizon planner over column combinations of a past/future Hankel
// matrix built from recorded trajectories. Tracks the zero setpoint.
//
// The combination variable is restricted to the row space of the data
// matrix (the ridge makes any other component suboptimal), so the problem
// is solved in the coordinates of the retained left singular vectors.
class DeepcController {
 public:
  DeepcController(const std::vector<data::Trajectory>& data, const data::SignalLayout& layout, int L,
                  DeepcConfig cfg = {});

  DeepcPlan plan(const Vector& past_window) const;
  Vector operator()(const Vector& past_window) const { return plan(past_window).u_first; }

  int rank() const { return static_cast<int>(basis_.cols()); }
  int columns() const { return columns_; }
  const DeepcConfig& config() const { return cfg_; }

 private:
  DeepcConfig cfg_;
  data::SignalLayout layout_;
  int L_;
  int columns_ = 0;
  Matrix basis_;  // U_r diag(sigma_r): rows = (L+1+horizon) w_dim
  Matrix past_;   // top rows of basis_
  Matrix future_;
  Vector weights_;  // per-row future cost weight
};

}  // namespace intrinsic::sim
