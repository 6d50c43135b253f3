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
#include <functional>
#include <string>
#include <vector>

#include "intrinsic/json_matrix.hpp"
#include "intrinsic/plant.hpp"

namespace intrinsic::sim {

// Maps the measured window (w_{k-1-L}, ..., w_{k-1}), stacked time-major in
// physical units, to the next input u_k.
using WindowController = std::function<Vector(const Vector& window)>;
// Optional certificate value evaluated on the same window.
using WindowMonitor = std::function<double(const Vector& window)>;

struct ClosedLoopConfig {
  int L = 0;
  // Samples 0..warmup use the setpoint input; must be >= L so the first
  // controller query sees a full window.
  int warmup = 0;
  int steps = 0;  // controller-driven samples after warmup
  Vector setpoint_input;  // empty means zero
  Vector saturation_lo;   // empty means unsaturated
  Vector saturation_hi;
  std::string controller_tag;

  void validate(const Plant& plant) const;
  io::json to_json() const;
};

struct ClosedLoopRecord {
  double t = 0.0;
  Vector state;
  Vector input;
  Vector w;
  Vector window;  // empty during warmup
  double V = std::numeric_limits<double>::quiet_NaN();
};

struct ClosedLoopLog {
  std::string controller;
  io::json config = io::json::object();
  std::vector<std::string> names;
  int warmup = 0;
  std::vector<ClosedLoopRecord> records;
  bool aborted = false;
  std::string diagnostic;

  // w_dim x records.size()
  Matrix samples() const;
  Matrix states() const;
  bool has_monitor() const;
};

ClosedLoopLog run_closed_loop(const Plant& plant, const WindowController& controller, const Vector& initial_state,
                              const ClosedLoopConfig& cfg, const WindowMonitor& monitor = {});

// Columns: t, manifest names, and V when a monitor was attached.
void write_log_csv(const ClosedLoopLog& log, const std::filesystem::path& path);

}  // namespace intrinsic::sim
