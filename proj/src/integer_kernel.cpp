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
#include "qlstm/integer_kernel.hpp"

#include <cstdint>
#include <stdexcept>

#include "qlstm/activations.hpp"

// Everything below runs in integer arithmetic only. The poison pragma makes
// any floating-point token in this translation unit a compile error; the
// acceptance suite additionally audits the FPU status flags at runtime.
#pragma GCC poison float double

namespace qlstm {
namespace {

constexpr int kSafeAccumulationDepth = 1 << 15;

// round(num / den) with ties away from zero; den > 0.
int64_t rounded_div(int64_t num, int64_t den) {
  const int64_t half = den / 2;
  return num >= 0 ? (num + half) / den : -((-num + half) / den);
}

void check_equal_sizes(size_t a, size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(what);
}

// Accumulators for one gate; the output gate passes the updated cell state.
void gate_accumulate(const QuantizedLstmModel& model,
                     const QuantizedGate& gate, std::span<const int8_t> x_q,
                     std::span<const int8_t> h_q,
                     std::span<const int16_t> peephole_c,
                     GateAccumulators& accs) {
  accs.from_input = matvec_i8(gate.w_input, model.cell_dim, model.input_dim,
                              x_q, gate.input_bias);
  accs.from_recurrent = matvec_i8(gate.w_recurrent, model.cell_dim,
                                  model.output_dim, h_q, gate.recurrent_bias);
  if (!gate.peephole.empty()) {
    accs.from_cell = elementwise_mul_i16(gate.peephole, peephole_c);
  } else {
    accs.from_cell.clear();
  }
}

// Shared gate path: accumulate, rescale-add, optional layer norm. The result
// is int16 Q_{3.12} either way.
void gate_forward(const QuantizedLstmModel& model, const QuantizedGate& gate,
                  std::span<const int8_t> x_q, std::span<const int8_t> h_q,
                  std::span<const int16_t> peephole_c, IntStepScratch& s,
                  std::vector<int16_t>& out) {
  gate_accumulate(model, gate, x_q, h_q, peephole_c, s.accs);
  out = gate_pre_activation(s.accs, gate);
  if (model.variant.layer_norm) {
    out = layer_norm_integer(out, gate);
  }
}

}  // namespace

IntLstmState IntLstmState::zero(const QuantizedLstmModel& model) {
  return IntLstmState{std::vector<int8_t>(model.output_dim, 0),
                      std::vector<int16_t>(model.cell_dim, 0)};
}

std::vector<int32_t> matvec_i8(std::span<const int8_t> weights, int rows,
                               int cols, std::span<const int8_t> v,
                               std::span<const int32_t> bias) {
  if (cols > kSafeAccumulationDepth) {
    throw std::invalid_argument("matvec_i8: depth exceeds the safe int32 accumulation bound of 2^15");
  }
  if (weights.size() != static_cast<size_t>(rows) * cols ||
      v.size() != static_cast<size_t>(cols) ||
      bias.size() != static_cast<size_t>(rows)) {
    throw std::invalid_argument("matvec_i8: shape mismatch");
  }
  std::vector<int32_t> out(rows);
  for (int r = 0; r < rows; ++r) {
    const int8_t* row = weights.data() + size_t(r) * cols;
    int32_t acc = 0;  // |sum| <= 2^15 * 127 * 128 < 2^31
    for (int j = 0; j < cols; ++j) {
      acc += int32_t{row[j]} * int32_t{v[j]};
    }
    out[r] = saturate_i32(int64_t{acc} + bias[r]);
  }
  return out;
}

std::vector<int32_t> elementwise_mul_i16(std::span<const int16_t> a,
                                         std::span<const int16_t> b) {
  check_equal_sizes(a.size(), b.size(), "elementwise_mul_i16: length mismatch");
  std::vector<int32_t> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    out[i] = int32_t{a[i]} * int32_t{b[i]};
  }
  return out;
}

std::vector<int16_t> gate_pre_activation(const GateAccumulators& accs,
                                         const QuantizedGate& gate) {
  const size_t n = accs.from_input.size();
  check_equal_sizes(n, accs.from_recurrent.size(),
                    "gate_pre_activation: accumulator length mismatch");
  std::vector<int16_t> out(n);
  for (size_t i = 0; i < n; ++i) {
    int16_t sum =
        saturating_add_i16(saturate_i16(rescale(accs.from_input[i], gate.input_eff)),
                           saturate_i16(rescale(accs.from_recurrent[i], gate.recurrent_eff)));
    if (!accs.from_cell.empty()) {
      sum = saturating_add_i16(
          sum, saturate_i16(rescale(accs.from_cell[i], gate.peephole_eff)));
    }
    out[i] = sum;
  }
  return out;
}

std::vector<int16_t> layer_norm_integer(std::span<const int16_t> q,
                                        const QuantizedGate& gate) {
  const size_t n = q.size();
  if (n == 0) throw std::invalid_argument("layer_norm_integer: empty input");
  check_equal_sizes(n, gate.ln_coeff.size(), "layer_norm_integer: coeff length mismatch");
  check_equal_sizes(n, gate.ln_bias.size(), "layer_norm_integer: bias length mismatch");

  int64_t sum = 0;
  int64_t sum_sq = 0;
  for (int16_t v : q) {
    sum += v;
    sum_sq += int64_t{v} * v;
  }
  const auto count = static_cast<int64_t>(n);
  const int64_t mean = rounded_div(sum << 10, count);  // 2^10-scaled
  // E[(2^10 q)^2] - mean^2; the 128-bit product keeps the sum exact for any
  // n up to the safe accumulation depth.
  const __int128 scaled_sq = static_cast<__int128>(sum_sq) << 20;
  const __int128 half = count / 2;
  const auto mean_sq_term = static_cast<int64_t>((scaled_sq + half) / count);
  int64_t variance = mean_sq_term - mean * mean;
  if (variance < 0) variance = 0;
  const auto stddev =
      static_cast<int64_t>(integer_sqrt(static_cast<uint64_t>(variance)));

  std::vector<int16_t> out(n);
  for (size_t i = 0; i < n; ++i) {
    const int64_t centered = (int64_t{q[i]} << 10) - mean;
    // Normalized value at scale 2^-10; |centered| <= stddev * sqrt(n) keeps
    // this within int32.
    const int64_t normalized =
        stddev == 0 ? 0 : rounded_div(centered << 10, stddev);
    const int64_t with_coeff = normalized * gate.ln_coeff[i] + gate.ln_bias[i];
    out[i] = saturate_i16(rescale(with_coeff, gate.ln_eff));
  }
  return out;
}

std::vector<int16_t> cifg_input_gate(std::span<const int16_t> forget) {
  std::vector<int16_t> out(forget.size());
  for (size_t i = 0; i < forget.size(); ++i) {
    const int32_t coupled = 32768 - int32_t{forget[i]};
    out[i] = static_cast<int16_t>(coupled > 32767 ? 32767 : coupled);
  }
  return out;
}

std::vector<int16_t> cell_update(std::span<const int16_t> input_gate,
                                 std::span<const int16_t> update_gate,
                                 std::span<const int16_t> forget_gate,
                                 std::span<const int16_t> cell,
                                 QFormat cell_format) {
  const size_t n = cell.size();
  check_equal_sizes(n, input_gate.size(), "cell_update: length mismatch");
  check_equal_sizes(n, update_gate.size(), "cell_update: length mismatch");
  check_equal_sizes(n, forget_gate.size(), "cell_update: length mismatch");
  const int m = cell_format.integer_bits;
  std::vector<int16_t> out(n);
  for (size_t i = 0; i < n; ++i) {
    // i*z is Q_{0.30} -> shift 15+m; f*c is Q_{m.30-m} -> shift 15.
    const int64_t write = rounded_shift_right(
        int64_t{input_gate[i]} * update_gate[i], 15 + m);
    const int64_t keep =
        rounded_shift_right(int64_t{forget_gate[i]} * cell[i], 15);
    out[i] = saturate_i16(write + keep);
  }
  return out;
}

std::vector<int8_t> hidden_update(std::span<const int16_t> output_gate,
                                  std::span<const int16_t> cell,
                                  QFormat cell_format, EffectiveScale eff,
                                  int zero_point) {
  check_equal_sizes(output_gate.size(), cell.size(), "hidden_update: length mismatch");
  std::vector<int8_t> out(cell.size());
  for (size_t i = 0; i < cell.size(); ++i) {
    const int16_t g = fixed_tanh(cell[i], cell_format);
    const int32_t product_rescaled =
        rescale(int32_t{output_gate[i]} * g, eff);
    out[i] = saturate_i8(int64_t{product_rescaled} + zero_point);
  }
  return out;
}

std::vector<int8_t> projection_step(std::span<const int8_t> weights, int rows,
                                    int cols, std::span<const int8_t> m,
                                    std::span<const int32_t> folded_bias,
                                    EffectiveScale eff, int zero_point) {
  const auto acc = matvec_i8(weights, rows, cols, m, folded_bias);
  std::vector<int8_t> out(rows);
  for (int r = 0; r < rows; ++r) {
    out[r] = saturate_i8(int64_t{rescale(acc[r], eff)} + zero_point);
  }
  return out;
}

std::vector<int8_t> integer_cell_step(const QuantizedLstmModel& model,
                                      std::span<const int8_t> x_q,
                                      IntLstmState& state,
                                      IntStepScratch* scratch) {
  if (static_cast<int>(x_q.size()) != model.input_dim) {
    throw std::invalid_argument("input vector has wrong dimension");
  }
  if (static_cast<int>(state.h_q.size()) != model.output_dim ||
      static_cast<int>(state.c_q.size()) != model.cell_dim) {
    throw std::invalid_argument("state has wrong dimensions");
  }
  IntStepScratch local;
  IntStepScratch& s = scratch ? *scratch : local;

  gate_forward(model, model.forget_gate, x_q, state.h_q, state.c_q, s,
               s.gate_forget);
  for (auto& v : s.gate_forget) v = fixed_sigmoid(v, QFormat::make(3));

  if (model.variant.cifg) {
    s.gate_input = cifg_input_gate(s.gate_forget);
  } else {
    gate_forward(model, model.input_gate, x_q, state.h_q, state.c_q, s,
                 s.gate_input);
    for (auto& v : s.gate_input) v = fixed_sigmoid(v, QFormat::make(3));
  }

  gate_forward(model, model.update_gate, x_q, state.h_q, {}, s, s.gate_update);
  for (auto& v : s.gate_update) v = fixed_tanh(v, QFormat::make(3));

  state.c_q = cell_update(s.gate_input, s.gate_update, s.gate_forget,
                          state.c_q, model.cell_format);

  // Output gate peephole reads the freshly updated cell state.
  gate_forward(model, model.output_gate, x_q, state.h_q, state.c_q, s,
               s.gate_output);
  for (auto& v : s.gate_output) v = fixed_sigmoid(v, QFormat::make(3));

  std::vector<int8_t> hidden =
      hidden_update(s.gate_output, state.c_q, model.cell_format,
                    model.hidden_eff, model.m_params.zero_point);

  if (model.variant.projection) {
    state.h_q = projection_step(model.projection_weights, model.output_dim,
                                model.cell_dim, hidden, model.projection_bias,
                                model.projection_eff,
                                model.h_params.zero_point);
  } else {
    state.h_q = std::move(hidden);
  }
  return state.h_q;
}

std::vector<IntLstmState> integer_sequence_run(
    const QuantizedLstmModel& model,
    const std::vector<std::vector<int8_t>>& inputs,
    const IntLstmState& initial_state) {
  std::vector<IntLstmState> states;
  states.reserve(inputs.size());
  IntLstmState state = initial_state;
  IntStepScratch scratch;
  for (const auto& x : inputs) {
    integer_cell_step(model, x, state, &scratch);
    states.push_back(state);
  }
  return states;
}

}  // namespace qlstm
