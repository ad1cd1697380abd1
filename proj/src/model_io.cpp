/* Copyright 2026 The QLSTM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "qlstm/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace qlstm {
namespace {

using nlohmann::json;

json scale_to_json(double v) {
  int exponent = 0;
  const double fraction = std::frexp(v, &exponent);
  const auto mantissa = static_cast<int64_t>(std::ldexp(fraction, 53));
  char dec[40];
  std::snprintf(dec, sizeof(dec), "%.17g", v);
  return json{{"dec", dec}, {"mantissa", mantissa}, {"exponent", exponent - 53}};
}

double scale_from_json(const json& j) {
  return std::ldexp(static_cast<double>(j.at("mantissa").get<int64_t>()),
                    j.at("exponent").get<int>());
}

json effective_scale_to_json(const EffectiveScale& s) {
  return json{{"mantissa", s.mantissa}, {"exponent", s.exponent}};
}

EffectiveScale effective_scale_from_json(const json& j) {
  return EffectiveScale{j.at("mantissa").get<int32_t>(),
                        j.at("exponent").get<int>()};
}

template <typename T>
const char* dtype_tag() {
  if constexpr (std::is_same_v<T, double>) return "f64";
  if constexpr (std::is_same_v<T, int8_t>) return "i8";
  if constexpr (std::is_same_v<T, int16_t>) return "i16";
  if constexpr (std::is_same_v<T, int32_t>) return "i32";
}

template <typename T>
json tensor_to_json(const std::vector<T>& data, std::vector<int> shape) {
  return json{{"dtype", dtype_tag<T>()}, {"shape", shape}, {"data", data}};
}

template <typename T>
std::vector<T> tensor_from_json(const json& j, const std::string& name) {
  if (j.at("dtype").get<std::string>() != dtype_tag<T>()) {
    throw std::runtime_error("tensor " + name + " has unexpected dtype");
  }
  size_t expected = 1;
  for (int d : j.at("shape").get<std::vector<int>>()) {
    expected *= static_cast<size_t>(d);
  }
  auto data = j.at("data").get<std::vector<T>>();
  if (data.size() != expected) {
    throw std::runtime_error("tensor " + name + " data does not match its shape");
  }
  return data;
}

json variant_to_json(const LstmVariant& v) {
  return json{{"layer_norm", v.layer_norm},
              {"projection", v.projection},
              {"peephole", v.peephole},
              {"cifg", v.cifg}};
}

LstmVariant variant_from_json(const json& j) {
  return LstmVariant{j.at("layer_norm").get<bool>(),
                     j.at("projection").get<bool>(),
                     j.at("peephole").get<bool>(), j.at("cifg").get<bool>()};
}

json asymmetric_to_json(const AsymmetricParams& p) {
  return json{{"scale", scale_to_json(p.scale)}, {"zero_point", p.zero_point}};
}

AsymmetricParams asymmetric_from_json(const json& j) {
  return AsymmetricParams{scale_from_json(j.at("scale")),
                          j.at("zero_point").get<int>()};
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("cannot parse '" + path + "': " + e.what());
  }
  return j;
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

void check_header(const json& j, const std::string& path,
                  const char* expected_kind) {
  if (j.value("format_version", -1) != kFormatVersion) {
    throw std::runtime_error("'" + path + "' has an unsupported format version");
  }
  if (j.value("kind", "") != expected_kind) {
    throw std::runtime_error("'" + path + "' is not a " + expected_kind + " file");
  }
}

const char* kGateNames[] = {"input", "forget", "update", "output"};

json float_gate_to_json(const FloatGateWeights& g, int cell, int in, int out) {
  json j;
  j["w_input"] = tensor_to_json(g.w_input, {cell, in});
  j["w_recurrent"] = tensor_to_json(g.w_recurrent, {cell, out});
  j["bias"] = tensor_to_json(g.bias, {cell});
  if (!g.peephole.empty()) j["peephole"] = tensor_to_json(g.peephole, {cell});
  if (!g.ln_coeff.empty()) j["ln_coeff"] = tensor_to_json(g.ln_coeff, {cell});
  return j;
}

FloatGateWeights float_gate_from_json(const json& j, const std::string& name) {
  FloatGateWeights g;
  g.w_input = tensor_from_json<double>(j.at("w_input"), name + ".w_input");
  g.w_recurrent =
      tensor_from_json<double>(j.at("w_recurrent"), name + ".w_recurrent");
  g.bias = tensor_from_json<double>(j.at("bias"), name + ".bias");
  if (j.contains("peephole")) {
    g.peephole = tensor_from_json<double>(j.at("peephole"), name + ".peephole");
  }
  if (j.contains("ln_coeff")) {
    g.ln_coeff = tensor_from_json<double>(j.at("ln_coeff"), name + ".ln_coeff");
  }
  return g;
}

json quantized_gate_to_json(const QuantizedGate& g, const LstmVariant& variant,
                            int cell, int in, int out) {
  json j;
  j["w_input"] = tensor_to_json(g.w_input, {cell, in});
  j["w_recurrent"] = tensor_to_json(g.w_recurrent, {cell, out});
  j["input_bias"] = tensor_to_json(g.input_bias, {cell});
  j["recurrent_bias"] = tensor_to_json(g.recurrent_bias, {cell});
  json scales;
  scales["w_input"] = scale_to_json(g.w_input_scale);
  scales["w_recurrent"] = scale_to_json(g.w_recurrent_scale);
  json rescales;
  rescales["input"] = effective_scale_to_json(g.input_eff);
  rescales["recurrent"] = effective_scale_to_json(g.recurrent_eff);
  if (!g.peephole.empty()) {
    j["peephole"] = tensor_to_json(g.peephole, {cell});
    scales["peephole"] = scale_to_json(g.peephole_scale);
    rescales["peephole"] = effective_scale_to_json(g.peephole_eff);
  }
  if (variant.layer_norm) {
    j["ln_coeff"] = tensor_to_json(g.ln_coeff, {cell});
    j["ln_bias"] = tensor_to_json(g.ln_bias, {cell});
    scales["ln_coeff"] = scale_to_json(g.ln_coeff_scale);
    scales["gate_output"] = scale_to_json(g.gate_output_scale);
    rescales["layer_norm"] = effective_scale_to_json(g.ln_eff);
  }
  j["scales"] = scales;
  j["rescales"] = rescales;
  return j;
}

QuantizedGate quantized_gate_from_json(const json& j,
                                       const LstmVariant& variant,
                                       const std::string& name) {
  QuantizedGate g;
  g.w_input = tensor_from_json<int8_t>(j.at("w_input"), name + ".w_input");
  g.w_recurrent =
      tensor_from_json<int8_t>(j.at("w_recurrent"), name + ".w_recurrent");
  g.input_bias =
      tensor_from_json<int32_t>(j.at("input_bias"), name + ".input_bias");
  g.recurrent_bias = tensor_from_json<int32_t>(j.at("recurrent_bias"),
                                               name + ".recurrent_bias");
  const json& scales = j.at("scales");
  const json& rescales = j.at("rescales");
  g.w_input_scale = scale_from_json(scales.at("w_input"));
  g.w_recurrent_scale = scale_from_json(scales.at("w_recurrent"));
  g.input_eff = effective_scale_from_json(rescales.at("input"));
  g.recurrent_eff = effective_scale_from_json(rescales.at("recurrent"));
  if (j.contains("peephole")) {
    g.peephole = tensor_from_json<int16_t>(j.at("peephole"), name + ".peephole");
    g.peephole_scale = scale_from_json(scales.at("peephole"));
    g.peephole_eff = effective_scale_from_json(rescales.at("peephole"));
  }
  if (variant.layer_norm) {
    g.ln_coeff = tensor_from_json<int16_t>(j.at("ln_coeff"), name + ".ln_coeff");
    g.ln_bias = tensor_from_json<int32_t>(j.at("ln_bias"), name + ".ln_bias");
    g.ln_coeff_scale = scale_from_json(scales.at("ln_coeff"));
    g.gate_output_scale = scale_from_json(scales.at("gate_output"));
    g.ln_eff = effective_scale_from_json(rescales.at("layer_norm"));
  }
  return g;
}

}  // namespace

ModelKind peek_model_kind(const std::string& path) {
  const json j = load_json_file(path);
  const std::string kind = j.value("kind", "");
  if (kind == "float") return ModelKind::kFloat;
  if (kind == "quantized") return ModelKind::kQuantized;
  throw std::runtime_error("'" + path + "' is not a model file");
}

void save_float_model(const FloatLstmModel& model, const std::string& path) {
  model.validate();
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "float";
  j["variant"] = variant_to_json(model.variant);
  j["dims"] = {{"input", model.input_dim},
               {"cell", model.cell_dim},
               {"output", model.output_dim}};
  json gates;
  const FloatGateWeights* all[] = {&model.input_gate, &model.forget_gate,
                                   &model.update_gate, &model.output_gate};
  for (int g = 0; g < 4; ++g) {
    if (g == 0 && model.variant.cifg) continue;
    gates[kGateNames[g]] = float_gate_to_json(*all[g], model.cell_dim,
                                              model.input_dim,
                                              model.output_dim);
  }
  j["gates"] = gates;
  if (model.variant.projection) {
    j["projection"] = {
        {"weights", tensor_to_json(model.projection_weights,
                                   {model.output_dim, model.cell_dim})},
        {"bias", tensor_to_json(model.projection_bias, {model.output_dim})}};
  }
  write_json_file(j, path);
}

FloatLstmModel load_float_model(const std::string& path) {
  const json j = load_json_file(path);
  check_header(j, path, "float");
  FloatLstmModel model;
  model.variant = variant_from_json(j.at("variant"));
  model.input_dim = j.at("dims").at("input").get<int>();
  model.cell_dim = j.at("dims").at("cell").get<int>();
  model.output_dim = j.at("dims").at("output").get<int>();
  const json& gates = j.at("gates");
  if (!model.variant.cifg) {
    model.input_gate = float_gate_from_json(gates.at("input"), "input");
  }
  model.forget_gate = float_gate_from_json(gates.at("forget"), "forget");
  model.update_gate = float_gate_from_json(gates.at("update"), "update");
  model.output_gate = float_gate_from_json(gates.at("output"), "output");
  if (model.variant.projection) {
    model.projection_weights = tensor_from_json<double>(
        j.at("projection").at("weights"), "projection.weights");
    model.projection_bias = tensor_from_json<double>(
        j.at("projection").at("bias"), "projection.bias");
  }
  model.validate();
  return model;
}

void save_quantized_model(const QuantizedLstmModel& model,
                          const std::string& path) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "quantized";
  j["variant"] = variant_to_json(model.variant);
  j["dims"] = {{"input", model.input_dim},
               {"cell", model.cell_dim},
               {"output", model.output_dim}};
  j["cell_integer_bits"] = model.cell_format.integer_bits;
  json params;
  params["x"] = asymmetric_to_json(model.x_params);
  params["h"] = asymmetric_to_json(model.h_params);
  if (model.variant.projection) {
    params["m"] = asymmetric_to_json(model.m_params);
  }
  j["activation_params"] = params;
  json gates;
  const QuantizedGate* all[] = {&model.input_gate, &model.forget_gate,
                                &model.update_gate, &model.output_gate};
  for (int g = 0; g < 4; ++g) {
    if (g == 0 && model.variant.cifg) continue;
    gates[kGateNames[g]] =
        quantized_gate_to_json(*all[g], model.variant, model.cell_dim,
                               model.input_dim, model.output_dim);
  }
  j["gates"] = gates;
  j["hidden_rescale"] = effective_scale_to_json(model.hidden_eff);
  if (model.variant.projection) {
    j["projection"] = {
        {"weights", tensor_to_json(model.projection_weights,
                                   {model.output_dim, model.cell_dim})},
        {"bias", tensor_to_json(model.projection_bias, {model.output_dim})},
        {"weight_scale", scale_to_json(model.projection_weight_scale)},
        {"rescale", effective_scale_to_json(model.projection_eff)}};
  }
  write_json_file(j, path);
}

QuantizedLstmModel load_quantized_model(const std::string& path) {
  const json j = load_json_file(path);
  check_header(j, path, "quantized");
  QuantizedLstmModel model;
  model.variant = variant_from_json(j.at("variant"));
  model.input_dim = j.at("dims").at("input").get<int>();
  model.cell_dim = j.at("dims").at("cell").get<int>();
  model.output_dim = j.at("dims").at("output").get<int>();
  model.cell_format = QFormat::make(j.at("cell_integer_bits").get<int>(), 16);
  const json& params = j.at("activation_params");
  model.x_params = asymmetric_from_json(params.at("x"));
  model.h_params = asymmetric_from_json(params.at("h"));
  model.m_params = model.variant.projection
                       ? asymmetric_from_json(params.at("m"))
                       : model.h_params;
  const json& gates = j.at("gates");
  if (!model.variant.cifg) {
    model.input_gate =
        quantized_gate_from_json(gates.at("input"), model.variant, "input");
  }
  model.forget_gate =
      quantized_gate_from_json(gates.at("forget"), model.variant, "forget");
  model.update_gate =
      quantized_gate_from_json(gates.at("update"), model.variant, "update");
  model.output_gate =
      quantized_gate_from_json(gates.at("output"), model.variant, "output");
  model.hidden_eff = effective_scale_from_json(j.at("hidden_rescale"));
  if (model.variant.projection) {
    const json& proj = j.at("projection");
    model.projection_weights =
        tensor_from_json<int8_t>(proj.at("weights"), "projection.weights");
    model.projection_bias =
        tensor_from_json<int32_t>(proj.at("bias"), "projection.bias");
    model.projection_weight_scale = scale_from_json(proj.at("weight_scale"));
    model.projection_eff = effective_scale_from_json(proj.at("rescale"));
  }
  return model;
}

namespace {

json tensor_stats_to_json(const TensorStats& s) {
  return json{{"min", s.min_seen}, {"max", s.max_seen}, {"count", s.count}};
}

TensorStats tensor_stats_from_json(const json& j) {
  return TensorStats{j.at("min").get<double>(), j.at("max").get<double>(),
                     j.at("count").get<int64_t>()};
}

}  // namespace

void save_stats(const CalibrationStats& stats, const LstmVariant& variant,
                const std::string& path) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "stats";
  j["variant"] = variant_to_json(variant);
  json tensors;
  tensors["x"] = tensor_stats_to_json(stats.x);
  tensors["h"] = tensor_stats_to_json(stats.h);
  tensors["c"] = tensor_stats_to_json(stats.c);
  if (variant.projection) tensors["m"] = tensor_stats_to_json(stats.m);
  if (variant.layer_norm) {
    if (!variant.cifg) tensors["g_input"] = tensor_stats_to_json(stats.g_input);
    tensors["g_forget"] = tensor_stats_to_json(stats.g_forget);
    tensors["g_update"] = tensor_stats_to_json(stats.g_update);
    tensors["g_output"] = tensor_stats_to_json(stats.g_output);
  }
  j["tensors"] = tensors;
  write_json_file(j, path);
}

CalibrationStats load_stats(const std::string& path, LstmVariant* variant) {
  const json j = load_json_file(path);
  check_header(j, path, "stats");
  if (variant) *variant = variant_from_json(j.at("variant"));
  const json& tensors = j.at("tensors");
  CalibrationStats stats;
  stats.x = tensor_stats_from_json(tensors.at("x"));
  stats.h = tensor_stats_from_json(tensors.at("h"));
  stats.c = tensor_stats_from_json(tensors.at("c"));
  if (tensors.contains("m")) stats.m = tensor_stats_from_json(tensors.at("m"));
  if (tensors.contains("g_input")) {
    stats.g_input = tensor_stats_from_json(tensors.at("g_input"));
  }
  if (tensors.contains("g_forget")) {
    stats.g_forget = tensor_stats_from_json(tensors.at("g_forget"));
    stats.g_update = tensor_stats_from_json(tensors.at("g_update"));
    stats.g_output = tensor_stats_from_json(tensors.at("g_output"));
  }
  return stats;
}

void save_sequences(const Dataset& dataset, const std::string& path) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "sequences";
  json records = json::array();
  for (const auto& sequence : dataset) {
    records.push_back(json{{"inputs", sequence}});
  }
  j["sequences"] = records;
  write_json_file(j, path);
}

Dataset load_sequences(const std::string& path) {
  const json j = load_json_file(path);
  check_header(j, path, "sequences");
  Dataset dataset;
  size_t dim = 0;
  for (const json& record : j.at("sequences")) {
    auto seq = record.at("inputs")
                   .get<std::vector<std::vector<double>>>();
    for (const auto& x : seq) {
      if (dim == 0) dim = x.size();
      if (x.size() != dim || dim == 0) {
        throw std::runtime_error("'" + path + "' has inconsistent input dimensions");
      }
    }
    dataset.push_back(std::move(seq));
  }
  return dataset;
}

void save_run_output(const RunOutput& output, const std::string& path) {
  json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "outputs";
  j["engine"] = output.engine;
  json records = json::array();
  for (size_t i = 0; i < output.h.size(); ++i) {
    json record{{"h", output.h[i]}};
    if (!output.c.empty()) record["c"] = output.c[i];
    records.push_back(std::move(record));
  }
  j["sequences"] = records;
  write_json_file(j, path);
}

}  // namespace qlstm
