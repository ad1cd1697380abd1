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
#pragma once

#include <string>
#include <vector>

#include "qlstm/calibration.hpp"
#include "qlstm/float_lstm.hpp"
#include "qlstm/quantizer.hpp"

// JSON file formats for models, calibration statistics and input sequences.
// All numbers are decimal JSON; quantization scales are additionally stored
// as exact (mantissa, exponent) integer pairs so a reload is bit-identical.

namespace qlstm {

inline constexpr int kFormatVersion = 1;

enum class ModelKind { kFloat, kQuantized };

// "float" or "quantized", without loading the tensors. Throws on anything
// that is not a model file.
ModelKind peek_model_kind(const std::string& path);

void save_float_model(const FloatLstmModel& model, const std::string& path);
FloatLstmModel load_float_model(const std::string& path);

void save_quantized_model(const QuantizedLstmModel& model,
                          const std::string& path);
QuantizedLstmModel load_quantized_model(const std::string& path);

void save_stats(const CalibrationStats& stats, const LstmVariant& variant,
                const std::string& path);
CalibrationStats load_stats(const std::string& path, LstmVariant* variant = nullptr);

// A dataset is a list of sequences; each sequence a list of input vectors.
using Dataset = std::vector<std::vector<std::vector<double>>>;

void save_sequences(const Dataset& dataset, const std::string& path);
Dataset load_sequences(const std::string& path);

// Per-timestep engine outputs of `run`: h always, c when requested.
struct RunOutput {
  std::string engine;  // "float" or "integer"
  std::vector<std::vector<std::vector<double>>> h;  // [seq][t][output_dim]
  std::vector<std::vector<std::vector<double>>> c;  // empty unless dumped
};

void save_run_output(const RunOutput& output, const std::string& path);

}  // namespace qlstm
