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
#include <utility>
#include <vector>

#include "qlstm/calibration.hpp"
#include "qlstm/fixedpoint.hpp"
#include "qlstm/float_lstm.hpp"

// Converts a float model plus calibration statistics into the integer-only
// model: int8 weights, int16 peephole / layer-norm coefficients, int32
// folded biases, power-of-two cell format, and a precomputed EffectiveScale
// for every rescale site the kernel executes.

namespace qlstm {

// One gate's integer tensors. Bias folding convention (real = s * (q - zp)):
// the x-path zero point folds into `input_bias`, the h-path zero point into
// `recurrent_bias`; without layer norm `recurrent_bias` also carries the
// gate bias quantized at s_R * s_h, with layer norm the gate bias lives in
// `ln_bias` at scale 2^-10 * s_L.
struct QuantizedGate {
  std::vector<int8_t> w_input;       // [cell_dim x input_dim]
  std::vector<int8_t> w_recurrent;   // [cell_dim x output_dim]
  std::vector<int16_t> peephole;     // [cell_dim] when present
  std::vector<int32_t> input_bias;   // [cell_dim]
  std::vector<int32_t> recurrent_bias;  // [cell_dim]
  std::vector<int16_t> ln_coeff;     // [cell_dim] when layer norm
  std::vector<int32_t> ln_bias;      // [cell_dim] when layer norm

  double w_input_scale = 0.0;
  double w_recurrent_scale = 0.0;
  double peephole_scale = 0.0;
  double ln_coeff_scale = 0.0;
  double gate_output_scale = 0.0;  // measured max/32767, layer norm only

  EffectiveScale input_eff;      // accumulator(s_W s_x) -> gate output scale
  EffectiveScale recurrent_eff;  // accumulator(s_R s_h) -> gate output scale
  EffectiveScale peephole_eff;   // accumulator(s_P s_c) -> gate output scale
  EffectiveScale ln_eff;         // (2^-10 s_L) -> 2^-12, layer norm only
};

struct QuantizedLstmModel {
  LstmVariant variant;
  int input_dim = 0;
  int cell_dim = 0;
  int output_dim = 0;

  AsymmetricParams x_params;
  AsymmetricParams h_params;
  AsymmetricParams m_params;  // == h_params without projection
  QFormat cell_format;        // Q_{m.15-m}, scale 2^(m-15)

  QuantizedGate input_gate;  // tensors empty under CIFG
  QuantizedGate forget_gate;
  QuantizedGate update_gate;
  QuantizedGate output_gate;

  std::vector<int8_t> projection_weights;  // [output_dim x cell_dim]
  std::vector<int32_t> projection_bias;    // folded, [output_dim]
  double projection_weight_scale = 0.0;

  EffectiveScale hidden_eff;      // 2^-30 / s_m
  EffectiveScale projection_eff;  // s_Wproj * s_m / s_h

  double cell_scale() const {
    return static_cast<double>(int64_t{1} << cell_format.integer_bits) /
           32768.0;
  }
};

// Symmetric quantization to [-Q, Q] with scale max|v|/Q, Q = 127 (int8) or
// 32767 (int16). An all-zero tensor gets the fallback scale 1.0.
template <typename T>
std::pair<std::vector<T>, double> quantize_symmetric(
    std::span<const double> values);

// round(v / scale) clamped to [-(2^31 - 1), 2^31 - 1].
std::vector<int32_t> quantize_bias(std::span<const double> values,
                                   double scale);

// b'_r = b_r - zp * sum_j W[r, j], so the matmul kernel can treat the
// activation as symmetric. Throws if a folded value leaves int32.
std::vector<int32_t> fold_zero_point(std::span<const int8_t> weights,
                                     int rows, int cols, int zero_point,
                                     std::span<const int32_t> bias);

// Applies the full recipe. Throws std::runtime_error naming the first
// missing statistic, or if the measured cell range needs more than 6
// integer bits (the activation input limit).
QuantizedLstmModel build_quantized_model(const FloatLstmModel& model,
                                         const CalibrationStats& stats);

}  // namespace qlstm
