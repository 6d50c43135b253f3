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
#include <memory>
#include <string>

#include "intrinsic/behavior_data.hpp"
#include "intrinsic/drone.hpp"

namespace intrinsic::sim {

// Simulated system under test. Controllers never see this interface; they
// only receive measured windows.
class Plant {
 public:
  virtual ~Plant() = default;

  virtual std::string name() const = 0;
  virtual const data::SignalLayout& layout() const = 0;
  virtual int state_dim() const = 0;
  virtual double dt() const = 0;
  virtual void reset(const Vector& state) = 0;
  virtual Vector state() const = 0;
  // y_k; must not depend on u_k.
  virtual Vector output() const = 0;
  virtual void step(const Vector& u) = 0;
  virtual std::unique_ptr<Plant> clone() const = 0;

  // w_k assembled from the current output and the applied input.
  Vector sample(const Vector& u) const;
};

// State (x, y, z, mu); yaw is not measured.
class DronePlant final : public Plant {
 public:
  explicit DronePlant(double tau = kDroneTau);

  std::string name() const override { return "drone"; }
  const data::SignalLayout& layout() const override { return layout_; }
  int state_dim() const override { return 4; }
  double dt() const override { return tau_; }
  void reset(const Vector& state) override;
  Vector state() const override;
  Vector output() const override;
  void step(const Vector& u) override;
  std::unique_ptr<Plant> clone() const override { return std::make_unique<DronePlant>(*this); }

  const DroneState& drone_state() const { return state_; }

 private:
  double tau_;
  DroneState state_;
  data::SignalLayout layout_;
};

// x+ = A x + B u, y = C x. Manifest order is outputs then inputs.
class LinearPlant final : public Plant {
 public:
  LinearPlant(std::string name, Matrix A, Matrix B, Matrix C, double dt = 1.0);

  std::string name() const override { return name_; }
  const data::SignalLayout& layout() const override { return layout_; }
  int state_dim() const override { return static_cast<int>(A_.rows()); }
  double dt() const override { return dt_; }
  void reset(const Vector& state) override;
  Vector state() const override { return x_; }
  Vector output() const override { return C_ * x_; }
  void step(const Vector& u) override;
  std::unique_ptr<Plant> clone() const override { return std::make_unique<LinearPlant>(*this); }

  const Matrix& A() const { return A_; }
  const Matrix& B() const { return B_; }
  const Matrix& C() const { return C_; }

  // y+ = y + u
  static LinearPlant scalar_integrator();
  // position/velocity with position measured: n_B = 2, lag 2
  static LinearPlant double_integrator();
  // y+ = 2 y with no input
  static LinearPlant unstable_scalar();

 private:
  std::string name_;
  Matrix A_, B_, C_;
  double dt_;
  Vector x_;
  data::SignalLayout layout_;
};

std::unique_ptr<Plant> make_plant(const std::string& name);

struct GeneratorConfig {
  Vector input_lo;
  Vector input_hi;
  int hold_min = 1;
  int hold_max = 5;
  int length = 201;  // samples per trajectory, T = length - 1
  int count = 100;
  Vector init_lo;
  Vector init_hi;
  std::uint64_t seed = 0;
  std::string split = "train";

  void validate(const Plant& plant) const;

  // Inputs v in [0, 5], omega in [-0.5, 0.5], s in [-5, 5]; positions
  // uniform in [-10, 10]^3 and yaw uniform in [-pi, pi).
  static GeneratorConfig drone(int count, int length, std::uint64_t seed);
  // Positions in [-1, 1]^3 and inputs at 10% of the full ranges.
  static GeneratorConfig drone_near_origin(int count, int length, std::uint64_t seed);
  // Inputs uniform in [-1, 1] redrawn every step; states uniform in [-1, 1].
  static GeneratorConfig linear(const Plant& plant, int count, int length, std::uint64_t seed);
};

// Piecewise-constant random inputs with random hold lengths from a random
// initial state. Trajectory i uses its own generator seeded from (seed, i).
data::TrajectoryDataset generate_dataset(const Plant& plant, const GeneratorConfig& cfg);

// Trajectory i of generate_dataset, together with its initial state.
data::Trajectory generate_trajectory(const Plant& plant, const GeneratorConfig& cfg, std::size_t index,
                                     Vector* initial_state = nullptr);

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace intrinsic::sim
