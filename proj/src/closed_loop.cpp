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
#include "intrinsic/closed_loop.hpp"

#include <cmath>
#include <fstream>

namespace intrinsic::sim {

void ClosedLoopConfig::validate(const Plant& plant) const {
  const int u_dim = plant.layout().u_dim();
  require(L >= 0, "closed loop: L must be non-negative");
  require(warmup >= L, "closed loop: warmup must be at least L to fill the first window");
  require(steps >= 0, "closed loop: steps must be non-negative");
  require_dims(setpoint_input.size() == 0 || setpoint_input.size() == u_dim, "closed loop: setpoint input size");
  require_dims(saturation_lo.size() == saturation_hi.size(), "closed loop: saturation bounds differ in size");
  require_dims(saturation_lo.size() == 0 || saturation_lo.size() == u_dim, "closed loop: saturation size");
  if (saturation_lo.size() > 0)
    require((saturation_lo.array() <= saturation_hi.array()).all(), "closed loop: empty saturation range");
}

io::json ClosedLoopConfig::to_json() const {
  io::json j{{"L", L}, {"warmup", warmup}, {"steps", steps}, {"controller", controller_tag}};
  if (setpoint_input.size() > 0) j["setpoint_input"] = io::vector_to_json(setpoint_input);
  if (saturation_lo.size() > 0) {
    j["saturation_lo"] = io::vector_to_json(saturation_lo);
    j["saturation_hi"] = io::vector_to_json(saturation_hi);
  }
  return j;
}

Matrix ClosedLoopLog::samples() const {
  if (records.empty()) return {};
  Matrix m(records.front().w.size(), static_cast<Eigen::Index>(records.size()));
  for (std::size_t k = 0; k < records.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = records[k].w;
  return m;
}

Matrix ClosedLoopLog::states() const {
  if (records.empty()) return {};
  Matrix m(records.front().state.size(), static_cast<Eigen::Index>(records.size()));
  for (std::size_t k = 0; k < records.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = records[k].state;
  return m;
}

bool ClosedLoopLog::has_monitor() const {
  for (const auto& r : records)
    if (!std::isnan(r.V)) return true;
  return false;
}

ClosedLoopLog run_closed_loop(const Plant& proto, const WindowController& controller, const Vector& initial_state,
                              const ClosedLoopConfig& cfg, const WindowMonitor& monitor) {
  cfg.validate(proto);
  auto plant = proto.clone();
  plant->reset(initial_state);
  const auto& lay = plant->layout();
  const int w_dim = lay.w_dim;
  const Vector u_set = cfg.setpoint_input.size() > 0 ? cfg.setpoint_input : Vector::Zero(lay.u_dim());

  ClosedLoopLog log;
  log.controller = cfg.controller_tag;
  log.config = cfg.to_json();
  log.names = lay.names;
  log.warmup = cfg.warmup;
  const int total = cfg.warmup + 1 + cfg.steps;
  log.records.reserve(static_cast<std::size_t>(total));

  Vector window((cfg.L + 1) * w_dim);
  for (int k = 0; k < total; ++k) {
    ClosedLoopRecord rec;
    rec.t = k * plant->dt();
    rec.state = plant->state();
    Vector u = u_set;
    if (k > cfg.warmup) {
      for (int i = 0; i <= cfg.L; ++i)
        window.segment(static_cast<Eigen::Index>(i) * w_dim, w_dim) =
            log.records[static_cast<std::size_t>(k - 1 - cfg.L + i)].w;
      u = controller(window);
      if (u.size() != lay.u_dim() || !u.allFinite()) {
        log.aborted = true;
        log.diagnostic = "controller returned a non-finite or mis-sized input at step " + std::to_string(k);
        return log;
      }
      if (cfg.saturation_lo.size() > 0) u = u.cwiseMax(cfg.saturation_lo).cwiseMin(cfg.saturation_hi);
      rec.window = window;
      if (monitor) rec.V = monitor(window);
    }
    rec.input = u;
    rec.w = plant->sample(u);
    if (!rec.w.allFinite()) {
      log.aborted = true;
      log.diagnostic = "plant output became non-finite at step " + std::to_string(k);
      return log;
    }
    log.records.push_back(std::move(rec));
    plant->step(u);
  }
  return log;
}

void write_log_csv(const ClosedLoopLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const bool with_v = log.has_monitor();
  out << "t";
  for (const auto& n : log.names) out << ',' << n;
  if (with_v) out << ",V";
  out << '\n';
  for (const auto& r : log.records) {
    out << io::format_double(r.t);
    for (Eigen::Index i = 0; i < r.w.size(); ++i) out << ',' << io::format_double(r.w(i));
    if (with_v) out << ',' << (std::isnan(r.V) ? std::string() : io::format_double(r.V));
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace intrinsic::sim
