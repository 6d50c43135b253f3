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

#include "intrinsic/calib.hpp"

namespace intrinsic::calib {

// *.ckpt.json: layer dims per net, activation, Lyapunov bounds, flat params,
// normalizer, layout, L, g_dim, seed and the training configuration.
io::json checkpoint_to_json(const CalibModel& model, const TrainConfig& cfg);
CalibModel checkpoint_from_json(const io::json& j, TrainConfig* cfg = nullptr);

void save_checkpoint(const std::filesystem::path& file, const CalibModel& model, const TrainConfig& cfg);
CalibModel load_checkpoint(const std::filesystem::path& file, TrainConfig* cfg = nullptr);

}  // namespace intrinsic::calib
