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

#include "qlstm/quantizer.hpp"

// Executes one LSTM cell step with integer arithmetic only: int8 matrix
// accumulation into int32, quantized-multiplier rescales, int16 gate math,
// integer layer normalization, and int8 state output. Outputs are
// bit-deterministic across runs and platforms. The model is immutable and
// shareable across threads; each sequence owns its state and scratch.

namespace qlstm {

struct IntLstmState {
  std::vector<int8_t> h_q;   // [output_dim], asymmetric with h_params
  std::vector<int16_t> c_q;  // [cell_dim], Q_{m.15-m}

  static IntLstmState zero(const QuantizedLstmModel& model);
};

// The three per-gate int32 accumulators; each has its own scale
// (s_W s_x, s_R s_h, s_P s_c) and is rescaled independently.
struct GateAccumulators {
  std::vector<int32_t> from_input;
  std::vector<int32_t> from_recurrent;
  std::vector<int32_t> from_cell;  // empty without peephole
};

// result_r = sum_j W[r, j] * v[j] + bias_r, exact. Depth (cols) above 2^15
// could overflow the int32 accumulator and is rejected.
std::vector<int32_t> matvec_i8(std::span<const int8_t> weights, int rows,
                               int cols, std::span<const int8_t> v,
                               std::span<const int32_t> bias);

// Exact int16 x int16 elementwise products, widened to int32.
std::vector<int32_t> elementwise_mul_i16(std::span<const int16_t> a,
                                         std::span<const int16_t> b);

// Rescales each accumulator to the gate output scale and saturating-adds
// into int16. Without layer norm the output is Q_{3.12}; with layer norm it
// is the measured per-gate scale.
std::vector<int16_t> gate_pre_activation(const GateAccumulators& accs,
                                         const QuantizedGate& gate);

// Integer layer normalization: mean and variance on 2^10-scaled inputs with
// 64-bit intermediates, floor integer sqrt, then coefficient/bias applied
// and rescaled into Q_{3.12}. A zero-variance input returns the rescaled
// bias.
std::vector<int16_t> layer_norm_integer(std::span<const int16_t> q,
                                        const QuantizedGate& gate);

// Coupled input gate: i = min(32768 - f, 32767), keeping the result in
// int16 and in [1, 32767].
std::vector<int16_t> cifg_input_gate(std::span<const int16_t> forget);

// c' = round(i*z / 2^(15+m)) + round(f*c / 2^15), saturated to int16.
std::vector<int16_t> cell_update(std::span<const int16_t> input_gate,
                                 std::span<const int16_t> update_gate,
                                 std::span<const int16_t> forget_gate,
                                 std::span<const int16_t> cell,
                                 QFormat cell_format);

// m = rescale(o (.) tanh(c), 2^-30/s_m) + zp_m, saturated to int8.
std::vector<int8_t> hidden_update(std::span<const int16_t> output_gate,
                                  std::span<const int16_t> cell,
                                  QFormat cell_format, EffectiveScale eff,
                                  int zero_point);

// h = rescale(W_proj m + folded bias, s_Wproj s_m / s_h) + zp_h.
std::vector<int8_t> projection_step(std::span<const int8_t> weights, int rows,
                                    int cols, std::span<const int8_t> m,
                                    std::span<const int32_t> folded_bias,
                                    EffectiveScale eff, int zero_point);

// Reusable per-sequence scratch so the hot loop does not allocate.
struct IntStepScratch {
  GateAccumulators accs;
  std::vector<int16_t> pre;
  std::vector<int16_t> gate_input, gate_forget, gate_update, gate_output;
};

// One full cell step; writes the new state in place and returns the new h_q
// (which equals state.h_q). x_q must be quantized with the model's x params.
std::vector<int8_t> integer_cell_step(const QuantizedLstmModel& model,
                                      std::span<const int8_t> x_q,
                                      IntLstmState& state,
                                      IntStepScratch* scratch = nullptr);

// Unrolls the recurrence, returning the state after every step.
std::vector<IntLstmState> integer_sequence_run(
    const QuantizedLstmModel& model,
    const std::vector<std::vector<int8_t>>& inputs,
    const IntLstmState& initial_state);

}  // namespace qlstm
