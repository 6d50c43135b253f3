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
#include "intrinsic/plant.hpp"

#include <numbers>
#include <random>

#include "intrinsic/json_matrix.hpp"

namespace intrinsic::sim {

Vector Plant::sample(const Vector& u) const {
  const auto& lay = layout();
  require_dims(u.size() == lay.u_dim(), "plant: input dimension mismatch");
  const Vector y = output();
  Vector w(lay.w_dim);
  for (int i = 0; i < lay.y_dim(); ++i) w(lay.output_indices[static_cast<std::size_t>(i)]) = y(i);
  for (int i = 0; i < lay.u_dim(); ++i) w(lay.input_indices[static_cast<std::size_t>(i)]) = u(i);
  return w;
}

DronePlant::DronePlant(double tau) : tau_(tau), layout_(drone_layout()) {}

void DronePlant::reset(const Vector& state) {
  require_dims(state.size() == 4, "drone: state is (x, y, z, mu)");
  state_ = DroneState{state(0), state(1), state(2), state(3)};
}

Vector DronePlant::state() const { return Eigen::Vector4d(state_.x, state_.y, state_.z, state_.mu); }

Vector DronePlant::output() const { return Eigen::Vector3d(state_.x, state_.y, state_.z); }

void DronePlant::step(const Vector& u) {
  require_dims(u.size() == 3, "drone: input is (v, omega, s)");
  state_ = drone_step(state_, DroneInput{u(0), u(1), u(2)}, tau_);
}

LinearPlant::LinearPlant(std::string name, Matrix A, Matrix B, Matrix C, double dt)
    : name_(std::move(name)), A_(std::move(A)), B_(std::move(B)), C_(std::move(C)), dt_(dt) {
  require_dims(A_.rows() == A_.cols() && B_.rows() == A_.rows() && C_.cols() == A_.rows(),
               "linear plant: inconsistent A, B, C");
  x_ = Vector::Zero(A_.rows());
  std::vector<std::string> names;
  std::vector<int> inputs;
  for (Eigen::Index i = 0; i < C_.rows(); ++i) names.push_back("y" + std::to_string(i));
  for (Eigen::Index i = 0; i < B_.cols(); ++i) {
    inputs.push_back(static_cast<int>(names.size()));
    names.push_back("u" + std::to_string(i));
  }
  layout_ = data::SignalLayout::make(std::move(names), std::move(inputs));
}

void LinearPlant::reset(const Vector& state) {
  require_dims(state.size() == A_.rows(), "linear plant: state dimension mismatch");
  x_ = state;
}

void LinearPlant::step(const Vector& u) {
  require_dims(u.size() == B_.cols(), "linear plant: input dimension mismatch");
  x_ = A_ * x_ + B_ * u;
}

LinearPlant LinearPlant::scalar_integrator() {
  return LinearPlant("integrator", Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1));
}

LinearPlant LinearPlant::double_integrator() {
  Matrix A(2, 2);
  A << 1, 1, 0, 1;
  Matrix B(2, 1);
  B << 0.5, 1;
  Matrix C(1, 2);
  C << 1, 0;
  return LinearPlant("double-integrator", A, B, C);
}

LinearPlant LinearPlant::unstable_scalar() {
  return LinearPlant("unstable-scalar", Matrix::Constant(1, 1, 2.0), Matrix::Zero(1, 0), Matrix::Ones(1, 1));
}

std::unique_ptr<Plant> make_plant(const std::string& name) {
  if (name == "drone") return std::make_unique<DronePlant>();
  if (name == "integrator") return std::make_unique<LinearPlant>(LinearPlant::scalar_integrator());
  if (name == "double-integrator") return std::make_unique<LinearPlant>(LinearPlant::double_integrator());
  if (name == "unstable-scalar") return std::make_unique<LinearPlant>(LinearPlant::unstable_scalar());
  throw ValidationError("unknown plant '" + name + "' (drone, integrator, double-integrator, unstable-scalar)");
}

void GeneratorConfig::validate(const Plant& plant) const {
  const auto& lay = plant.layout();
  require_dims(input_lo.size() == lay.u_dim() && input_hi.size() == lay.u_dim(), "generator: input range size");
  require_dims(init_lo.size() == plant.state_dim() && init_hi.size() == plant.state_dim(),
               "generator: initial state range size");
  require((input_lo.array() <= input_hi.array()).all() && (init_lo.array() <= init_hi.array()).all(),
          "generator: empty range");
  require(hold_min >= 1 && hold_min <= hold_max && hold_max <= length, "generator: hold range must lie in [1, length]");
  require(length >= 1, "generator: length must be positive");
  require(count > 0, "generator: count must be positive");
}

GeneratorConfig GeneratorConfig::drone(int count, int length, std::uint64_t seed) {
  GeneratorConfig c;
  c.input_lo = Eigen::Vector3d(0.0, -0.5, -5.0);
  c.input_hi = Eigen::Vector3d(5.0, 0.5, 5.0);
  c.init_lo = Eigen::Vector4d(-10.0, -10.0, -10.0, -std::numbers::pi);
  c.init_hi = Eigen::Vector4d(10.0, 10.0, 10.0, std::numbers::pi);
  c.hold_min = 1;
  c.hold_max = 5;
  c.length = length;
  c.count = count;
  c.seed = seed;
  return c;
}

GeneratorConfig GeneratorConfig::drone_near_origin(int count, int length, std::uint64_t seed) {
  GeneratorConfig c = drone(count, length, seed);
  c.input_lo *= 0.1;
  c.input_hi *= 0.1;
  c.init_lo.head(3).setConstant(-1.0);
  c.init_hi.head(3).setConstant(1.0);
  return c;
}

GeneratorConfig GeneratorConfig::linear(const Plant& plant, int count, int length, std::uint64_t seed) {
  GeneratorConfig c;
  c.input_lo = Vector::Constant(plant.layout().u_dim(), -1.0);
  c.input_hi = Vector::Constant(plant.layout().u_dim(), 1.0);
  c.init_lo = Vector::Constant(plant.state_dim(), -1.0);
  c.init_hi = Vector::Constant(plant.state_dim(), 1.0);
  c.hold_min = 1;
  c.hold_max = 1;
  c.length = length;
  c.count = count;
  c.seed = seed;
  return c;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

data::Trajectory generate_trajectory(const Plant& proto, const GeneratorConfig& cfg, std::size_t index,
                                     Vector* initial_state) {
  auto plant = proto.clone();
  const auto& lay = plant->layout();
  std::mt19937_64 rng(derive_seed(cfg.seed, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> hold_dist(cfg.hold_min, cfg.hold_max);

  Vector x0(plant->state_dim());
  for (Eigen::Index i = 0; i < x0.size(); ++i) x0(i) = cfg.init_lo(i) + (cfg.init_hi(i) - cfg.init_lo(i)) * unit(rng);
  plant->reset(x0);
  if (initial_state) *initial_state = x0;

  data::Trajectory traj;
  traj.dt = plant->dt();
  traj.layout = std::make_shared<const data::SignalLayout>(lay);
  traj.samples.resize(lay.w_dim, cfg.length);
  Vector u(lay.u_dim());
  int hold_left = 0;
  for (int k = 0; k < cfg.length; ++k) {
    if (hold_left == 0) {
      for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = cfg.input_lo(i) + (cfg.input_hi(i) - cfg.input_lo(i)) * unit(rng);
      hold_left = hold_dist(rng);
    }
    traj.samples.col(k) = plant->sample(u);
    plant->step(u);
    --hold_left;
  }
  return traj;
}

data::TrajectoryDataset generate_dataset(const Plant& plant, const GeneratorConfig& cfg) {
  cfg.validate(plant);
  data::TrajectoryDataset ds;
  auto layout = std::make_shared<const data::SignalLayout>(plant.layout());
  ds.layout = layout;
  ds.dt = plant.dt();
  ds.split = cfg.split;
  ds.seed = cfg.seed;
  ds.setpoint = Vector::Zero(layout->w_dim);
  ds.provenance = {{"plant", plant.name()},
                   {"input_lo", io::vector_to_json(cfg.input_lo)},
                   {"input_hi", io::vector_to_json(cfg.input_hi)},
                   {"init_lo", io::vector_to_json(cfg.init_lo)},
                   {"init_hi", io::vector_to_json(cfg.init_hi)},
                   {"hold_min", cfg.hold_min},
                   {"hold_max", cfg.hold_max},
                   {"length", cfg.length},
                   {"count", cfg.count}};
  ds.trajectories.reserve(static_cast<std::size_t>(cfg.count));
  for (int i = 0; i < cfg.count; ++i) {
    data::Trajectory tr = generate_trajectory(plant, cfg, static_cast<std::size_t>(i));
    tr.layout = layout;
    ds.trajectories.push_back(std::move(tr));
  }
  return ds;
}

}  // namespace intrinsic::sim
