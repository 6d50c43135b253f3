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
#include "intrinsic/checkpoint.hpp"

#include "intrinsic/dataset_io.hpp"

namespace intrinsic::calib {

io::json checkpoint_to_json(const CalibModel& model, const TrainConfig& cfg) {
  io::json j;
  j["layer_dims"] = {{"chi", model.chi.layer_dims()},
                     {"eta", model.eta.layer_dims()},
                     {"psi", model.psi.layer_dims()},
                     {"phi", model.lyap.phi.layer_dims()}};
  j["activation"] = nn::to_string(model.chi.activation());
  j["a"] = model.lyap.a;
  j["b"] = model.lyap.b;
  j["params"] = io::vector_to_json(model.params);
  j["normalizer"] = {{"center", io::vector_to_json(model.normalizer.center)},
                     {"scale", io::vector_to_json(model.normalizer.scale)}};
  j["layout"] = data::layout_to_json(*model.layout);
  j["L"] = model.L;
  j["n_B"] = model.n_B;
  j["g_dim"] = model.g_dim;
  j["seed"] = model.seed;
  j["architecture"] = {{"hidden_width", model.arch.hidden_width},
                       {"hidden_layers", model.arch.hidden_layers},
                       {"lyap_width", model.arch.lyap_width},
                       {"lyap_layers", model.arch.lyap_layers}};
  j["train_config"] = train_config_to_json(cfg);
  return j;
}

CalibModel checkpoint_from_json(const io::json& j, TrainConfig* cfg) {
  try {
    auto layout = std::make_shared<const data::SignalLayout>(data::layout_from_json(j.at("layout")));
    data::Normalizer norm{io::vector_from_json(j.at("normalizer").at("center")),
                          io::vector_from_json(j.at("normalizer").at("scale"))};
    Architecture arch;
    const auto& a = j.at("architecture");
    arch.hidden_width = a.at("hidden_width").get<int>();
    arch.hidden_layers = a.at("hidden_layers").get<int>();
    arch.lyap_width = a.at("lyap_width").get<int>();
    arch.lyap_layers = a.at("lyap_layers").get<int>();
    arch.a = j.at("a").get<double>();
    arch.b = j.at("b").get<double>();
    nn::activation_from_string(j.at("activation").get<std::string>());

    CalibModel m = CalibModel::create(layout, j.at("L").get<int>(), j.at("n_B").get<int>(), std::move(norm), arch,
                                      j.value("seed", std::uint64_t{0}));
    require(m.g_dim == j.at("g_dim").get<int>(), "checkpoint: g_dim inconsistent with L and n_B");
    const auto& dims = j.at("layer_dims");
    require(dims.at("chi").get<std::vector<int>>() == m.chi.layer_dims() &&
                dims.at("eta").get<std::vector<int>>() == m.eta.layer_dims() &&
                dims.at("psi").get<std::vector<int>>() == m.psi.layer_dims() &&
                dims.at("phi").get<std::vector<int>>() == m.lyap.phi.layer_dims(),
            "checkpoint: layer dimensions inconsistent with architecture");
    Vector params = io::vector_from_json(j.at("params"));
    require_dims(params.size() == m.params.size(), "checkpoint: parameter count mismatch");
    m.params = std::move(params);
    if (cfg) *cfg = train_config_from_json(j.at("train_config"));
    return m;
  } catch (const io::json::exception& e) {
    throw ValidationError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& file, const CalibModel& model, const TrainConfig& cfg) {
  io::write_json_file(file, checkpoint_to_json(model, cfg), -1);
}

CalibModel load_checkpoint(const std::filesystem::path& file, TrainConfig* cfg) {
  return checkpoint_from_json(io::read_json_file(file), cfg);
}

}  // namespace intrinsic::calib
