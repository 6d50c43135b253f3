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
#include "intrinsic/dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace intrinsic::data {

namespace fs = std::filesystem;

io::json layout_to_json(const SignalLayout& layout) {
  return {{"w_dim", layout.w_dim},
          {"input_indices", layout.input_indices},
          {"output_indices", layout.output_indices},
          {"names", layout.names},
          {"units", layout.units}};
}

SignalLayout layout_from_json(const io::json& j) {
  SignalLayout layout;
  try {
    layout.w_dim = j.at("w_dim").get<int>();
    layout.input_indices = j.at("input_indices").get<std::vector<int>>();
    layout.output_indices = j.at("output_indices").get<std::vector<int>>();
    if (j.contains("names")) layout.names = j.at("names").get<std::vector<std::string>>();
    if (j.contains("units")) layout.units = j.at("units").get<std::vector<std::string>>();
  } catch (const io::json::exception& e) {
    throw ValidationError(std::string("layout: ") + e.what());
  }
  if (layout.names.empty()) {
    for (int i = 0; i < layout.w_dim; ++i) layout.names.push_back("w" + std::to_string(i));
  }
  layout.validate();
  return layout;
}

void write_trajectory_csv(const fs::path& file, const Trajectory& traj) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << 't';
  for (int i = 0; i < traj.w_dim(); ++i) {
    out << ',' << (traj.layout && !traj.layout->names.empty() ? traj.layout->names[static_cast<std::size_t>(i)]
                                                              : "w" + std::to_string(i));
  }
  out << '\n';
  for (int k = 0; k <= traj.T(); ++k) {
    out << io::format_double(k * traj.dt);
    for (int i = 0; i < traj.w_dim(); ++i) out << ',' << io::format_double(traj.samples(i, k));
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + file.string());
}

Trajectory read_trajectory_csv(const fs::path& file, LayoutPtr layout, double dt) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty CSV " + file.string());
  const int w = layout->w_dim;
  std::vector<double> values;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col > 0) values.push_back(std::stod(cell));
      ++col;
    }
    if (col != w + 1) throw ValidationError("wrong column count in " + file.string());
    ++rows;
  }
  Trajectory traj;
  traj.layout = std::move(layout);
  traj.dt = dt;
  traj.samples = Eigen::Map<const Matrix>(values.data(), w, rows);
  return traj;
}

void write_dataset(const fs::path& dir, const TrajectoryDataset& ds) {
  ds.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  io::json files = io::json::array();
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "traj_%05zu.csv", i);
    write_trajectory_csv(dir / name, ds.trajectories[i]);
    files.push_back(name);
  }
  io::json manifest = layout_to_json(*ds.layout);
  manifest["dt"] = ds.dt;
  manifest["setpoint"] = io::vector_to_json(ds.setpoint.size() ? ds.setpoint : Vector::Zero(ds.layout->w_dim));
  manifest["files"] = files;
  manifest["seed"] = ds.seed;
  manifest["split"] = ds.split;
  manifest["provenance"] = ds.provenance;
  io::write_json_file(dir / "dataset.json", manifest);
}

TrajectoryDataset read_dataset(const fs::path& dir) {
  const auto manifest = io::read_json_file(dir / "dataset.json");
  TrajectoryDataset ds;
  auto layout = std::make_shared<SignalLayout>(layout_from_json(manifest));
  ds.layout = layout;
  try {
    ds.dt = manifest.at("dt").get<double>();
    ds.setpoint = io::vector_from_json(manifest.at("setpoint"));
    ds.seed = manifest.value("seed", std::uint64_t{0});
    ds.split = manifest.value("split", std::string("train"));
    if (manifest.contains("provenance")) ds.provenance = manifest.at("provenance");
    for (const auto& f : manifest.at("files")) {
      ds.trajectories.push_back(read_trajectory_csv(dir / f.get<std::string>(), layout, ds.dt));
    }
  } catch (const io::json::exception& e) {
    throw ValidationError("dataset manifest " + (dir / "dataset.json").string() + ": " + e.what());
  }
  ds.validate();
  return ds;
}

}  // namespace intrinsic::data
