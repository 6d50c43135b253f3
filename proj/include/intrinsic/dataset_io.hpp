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

namespace intrinsic::data {

// On-disk dataset: <dir>/dataset.json manifest plus one CSV per trajectory
// with header "t,<name0>,..." and one row per step.
void write_dataset(const std::filesystem::path& dir, const TrajectoryDataset& ds);
TrajectoryDataset read_dataset(const std::filesystem::path& dir);

void write_trajectory_csv(const std::filesystem::path& file, const Trajectory& traj);
Trajectory read_trajectory_csv(const std::filesystem::path& file, LayoutPtr layout, double dt);

io::json layout_to_json(const SignalLayout& layout);
SignalLayout layout_from_json(const io::json& j);

}  // namespace intrinsic::data
