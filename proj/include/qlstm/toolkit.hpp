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

#include <cstdint>
#include <vector>

#include "qlstm/integer_kernel.hpp"
#include "qlstm/model_io.hpp"

// Model/dataset generation and float-vs-integer comparison: the pieces the
// CLI wires together and the verification harness reuses.

namespace qlstm {

// Reproducible pseudo-random model. Weights are uniform in [-0.5, 0.5],
// biases in [-1, 1], layer-norm coefficients in [0.5, 1.5]; the draw order
// is fixed, so a seed pins the file bytes. Without projection the output
// dimension is forced to the cell dimension.
FloatLstmModel generate_model(LstmVariant variant, int input_dim, int cell_dim,
                              int output_dim, uint64_t seed);

// num_sequences sequences of seq_len input vectors, uniform in [-1, 1].
Dataset generate_dataset(int input_dim, int num_sequences, int seq_len,
                         uint64_t seed);

// Quantizes a float input with the model's x params; the only
// floating-point step of an integer run.
std::vector<std::vector<int8_t>> quantize_inputs(
    const QuantizedLstmModel& model,
    const std::vector<std::vector<double>>& sequence);

struct SequenceComparison {
  double max_abs_error_steps = 0.0;     // in units of s_h
  double frac_within_1 = 0.0;
  double frac_within_3 = 0.0;
  double frac_within_16 = 0.0;
  std::vector<double> per_step_max_error_steps;
  std::vector<int> per_step_within_3;
  std::vector<int> per_step_within_16;
  std::vector<int> per_step_elements;
};

struct CompareReport {
  std::vector<SequenceComparison> sequences;
  double max_abs_error_steps = 0.0;
  double frac_within_1 = 0.0;
  double frac_within_3 = 0.0;
  double frac_within_16 = 0.0;
  double float_steps_per_second = 0.0;
  double integer_steps_per_second = 0.0;
};

// Runs both engines from zero state over every sequence and reports the
// dequantized-h error in units of s_h.
CompareReport run_compare(const FloatLstmModel& float_model,
                          const QuantizedLstmModel& quantized_model,
                          const Dataset& dataset);

void save_report(const CompareReport& report, const std::string& path);

}  // namespace qlstm
