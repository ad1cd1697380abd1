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
#include <span>
#include <vector>

// Double-precision LSTM cell covering every supported variant combination
// (layer normalization, projection, peephole, CIFG). This is the ground
// truth the quantized engine is verified against and the vehicle used to
// collect calibration statistics.

namespace qlstm {

struct LstmVariant {
  bool layer_norm = false;
  bool projection = false;
  bool peephole = false;
  bool cifg = false;

  friend bool operator==(const LstmVariant&, const LstmVariant&) = default;
};

// One gate's parameters. The input gate's tensors are absent (empty) under
// CIFG; peephole and layer-norm tensors are absent unless the variant
// enables them.
struct FloatGateWeights {
  std::vector<double> w_input;      // [cell_dim x input_dim], row-major
  std::vector<double> w_recurrent;  // [cell_dim x output_dim], row-major
  std::vector<double> peephole;     // [cell_dim]
  std::vector<double> bias;         // [cell_dim]
  std::vector<double> ln_coeff;     // [cell_dim]
};

struct FloatLstmModel {
  LstmVariant variant;
  int input_dim = 0;
  int cell_dim = 0;
  int output_dim = 0;  // == cell_dim unless variant.projection

  FloatGateWeights input_gate;   // empty under CIFG
  FloatGateWeights forget_gate;
  FloatGateWeights update_gate;  // no peephole on the update gate
  FloatGateWeights output_gate;

  std::vector<double> projection_weights;  // [output_dim x cell_dim]
  std::vector<double> projection_bias;     // [output_dim]

  // Throws std::invalid_argument if shapes are inconsistent with the dims
  // and variant flags, or any value is non-finite.
  void validate() const;
};

struct FloatLstmState {
  std::vector<double> h;  // [output_dim]
  std::vector<double> c;  // [cell_dim]

  static FloatLstmState zero(const FloatLstmModel& model) {
    return FloatLstmState{std::vector<double>(model.output_dim, 0.0),
                          std::vector<double>(model.cell_dim, 0.0)};
  }
};

// Pre-activation linear sums (W x + R h + P (.) c) per gate, captured during
// a step for calibration of the layer-norm gate scales.
struct FloatStepTrace {
  std::vector<double> gate_linear_input;
  std::vector<double> gate_linear_forget;
  std::vector<double> gate_linear_update;
  std::vector<double> gate_linear_output;
  std::vector<double> hidden_pre_projection;  // m before projection
};

// y = (x - mean(x)) / stddev(x) * coeff + bias with population (1/n)
// variance and no epsilon; a zero-variance input yields the bias.
std::vector<double> float_layer_norm(std::span<const double> x,
                                     std::span<const double> coeff,
                                     std::span<const double> bias);

// Advances the cell by one timestep; state is updated in place and the new
// output is state.h. Pass a trace to capture calibration observation points.
void float_cell_step(const FloatLstmModel& model, std::span<const double> x,
                     FloatLstmState& state, FloatStepTrace* trace = nullptr);

// Unrolls the recurrence over a sequence, returning (h, c) after every step.
std::vector<FloatLstmState> float_sequence_run(
    const FloatLstmModel& model,
    const std::vector<std::vector<double>>& inputs,
    const FloatLstmState& initial_state);

}  // namespace qlstm
