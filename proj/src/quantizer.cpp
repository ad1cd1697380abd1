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
#include "qlstm/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>

namespace qlstm {
namespace {

constexpr double kGateOutputScaleNoLn = 1.0 / 4096.0;    // Q_{3.12}
constexpr double kLnInternalScale = 1.0 / 1024.0;        // s' = 2^-10
constexpr double kLnOutputScale = kGateOutputScaleNoLn;  // gates read Q_{3.12}

double max_abs(std::span<const double> values) {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

void require_stats(const TensorStats& stats, const char* name) {
  if (stats.count == 0) {
    throw std::runtime_error(std::string("missing calibration statistics for tensor '") +
                             name + "'");
  }
}

// max(|min|, |max|)/32767 for measured int16-symmetric tensors (layer-norm
// gate outputs). Degenerate zero ranges fall back to scale 1.0, mirroring
// quantize_symmetric.
double symmetric_scale_from_range(const TensorStats& stats) {
  const double bound = std::max(std::abs(stats.min_seen), std::abs(stats.max_seen));
  return bound == 0.0 ? 1.0 : bound / 32767.0;
}

struct GateStatsRefs {
  const TensorStats* linear = nullptr;
  const char* name = "";
};

QuantizedGate quantize_gate(const FloatLstmModel& model,
                            const FloatGateWeights& gate,
                            const AsymmetricParams& x_params,
                            const AsymmetricParams& h_params,
                            double cell_scale, const GateStatsRefs& gate_stats) {
  const bool layer_norm = model.variant.layer_norm;
  QuantizedGate q;

  std::tie(q.w_input, q.w_input_scale) =
      quantize_symmetric<int8_t>(gate.w_input);
  std::tie(q.w_recurrent, q.w_recurrent_scale) =
      quantize_symmetric<int8_t>(gate.w_recurrent);
  if (!gate.peephole.empty()) {
    std::tie(q.peephole, q.peephole_scale) =
        quantize_symmetric<int16_t>(gate.peephole);
  }

  double output_scale = kGateOutputScaleNoLn;
  if (layer_norm) {
    require_stats(*gate_stats.linear, gate_stats.name);
    q.gate_output_scale = symmetric_scale_from_range(*gate_stats.linear);
    output_scale = q.gate_output_scale;

    std::tie(q.ln_coeff, q.ln_coeff_scale) =
        quantize_symmetric<int16_t>(gate.ln_coeff);
    q.ln_bias = quantize_bias(gate.bias, kLnInternalScale * q.ln_coeff_scale);
    q.ln_eff = quantize_multiplier(kLnInternalScale * q.ln_coeff_scale /
                                   kLnOutputScale);
  }

  // Zero-point folds. Without layer norm the gate bias rides on the
  // recurrent accumulator (quantized at s_R * s_h, the finest of the three
  // accumulator scales).
  const std::vector<int32_t> zeros(model.cell_dim, 0);
  q.input_bias = fold_zero_point(q.w_input, model.cell_dim, model.input_dim,
                                 x_params.zero_point, zeros);
  std::vector<int32_t> recurrent_base =
      layer_norm ? zeros
                 : quantize_bias(gate.bias,
                                 q.w_recurrent_scale * h_params.scale);
  q.recurrent_bias =
      fold_zero_point(q.w_recurrent, model.cell_dim, model.output_dim,
                      h_params.zero_point, recurrent_base);

  q.input_eff =
      quantize_multiplier(q.w_input_scale * x_params.scale / output_scale);
  q.recurrent_eff =
      quantize_multiplier(q.w_recurrent_scale * h_params.scale / output_scale);
  if (!gate.peephole.empty()) {
    q.peephole_eff =
        quantize_multiplier(q.peephole_scale * cell_scale / output_scale);
  }
  return q;
}

}  // namespace

template <typename T>
std::pair<std::vector<T>, double> quantize_symmetric(
    std::span<const double> values) {
  static_assert(std::is_same_v<T, int8_t> || std::is_same_v<T, int16_t>);
  constexpr int64_t kLimit = std::is_same_v<T, int8_t> ? 127 : 32767;
  const double bound = max_abs(values);
  const double scale = bound == 0.0 ? 1.0 : bound / static_cast<double>(kLimit);
  std::vector<T> q(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    const auto raw = static_cast<int64_t>(std::llround(values[i] / scale));
    q[i] = static_cast<T>(std::clamp(raw, -kLimit, kLimit));
  }
  return {std::move(q), scale};
}

template std::pair<std::vector<int8_t>, double> quantize_symmetric<int8_t>(
    std::span<const double>);
template std::pair<std::vector<int16_t>, double> quantize_symmetric<int16_t>(
    std::span<const double>);

std::vector<int32_t> quantize_bias(std::span<const double> values,
                                   double scale) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("quantize_bias: scale must be positive");
  }
  constexpr int64_t kLimit = (int64_t{1} << 31) - 1;
  std::vector<int32_t> q(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    const auto raw = static_cast<int64_t>(std::llround(values[i] / scale));
    q[i] = static_cast<int32_t>(std::clamp(raw, -kLimit, kLimit));
  }
  return q;
}

std::vector<int32_t> fold_zero_point(std::span<const int8_t> weights,
                                     int rows, int cols, int zero_point,
                                     std::span<const int32_t> bias) {
  if (weights.size() != static_cast<size_t>(rows) * cols ||
      bias.size() != static_cast<size_t>(rows)) {
    throw std::invalid_argument("fold_zero_point: shape mismatch");
  }
  std::vector<int32_t> folded(rows);
  for (int r = 0; r < rows; ++r) {
    int64_t row_sum = 0;
    const int8_t* row = weights.data() + size_t(r) * cols;
    for (int j = 0; j < cols; ++j) row_sum += row[j];
    const int64_t value = int64_t{bias[r]} - int64_t{zero_point} * row_sum;
    if (value > std::numeric_limits<int32_t>::max() ||
        value < std::numeric_limits<int32_t>::min()) {
      throw std::runtime_error("fold_zero_point: folded bias overflows int32");
    }
    folded[r] = static_cast<int32_t>(value);
  }
  return folded;
}

QuantizedLstmModel build_quantized_model(const FloatLstmModel& model,
                                         const CalibrationStats& stats) {
  model.validate();
  require_stats(stats.x, "x");
  require_stats(stats.h, "h");
  require_stats(stats.c, "c");
  if (model.variant.projection) require_stats(stats.m, "m");

  QuantizedLstmModel q;
  q.variant = model.variant;
  q.input_dim = model.input_dim;
  q.cell_dim = model.cell_dim;
  q.output_dim = model.output_dim;

  q.x_params = asymmetric_params(stats.x.min_seen, stats.x.max_seen);
  q.h_params = asymmetric_params(stats.h.min_seen, stats.h.max_seen);
  q.m_params = model.variant.projection
                   ? asymmetric_params(stats.m.min_seen, stats.m.max_seen)
                   : q.h_params;

  q.cell_format = pot_extend(stats.c.min_seen, stats.c.max_seen);
  if (q.cell_format.integer_bits > 6) {
    throw std::runtime_error("cell state range needs more than 6 integer bits; tanh input format tops out at Q_{6.9}");
  }
  const double cell_scale = q.cell_scale();

  if (!model.variant.cifg) {
    q.input_gate = quantize_gate(model, model.input_gate, q.x_params,
                                 q.h_params, cell_scale,
                                 {&stats.g_input, "g_input"});
  }
  q.forget_gate = quantize_gate(model, model.forget_gate, q.x_params,
                                q.h_params, cell_scale,
                                {&stats.g_forget, "g_forget"});
  q.update_gate = quantize_gate(model, model.update_gate, q.x_params,
                                q.h_params, cell_scale,
                                {&stats.g_update, "g_update"});
  q.output_gate = quantize_gate(model, model.output_gate, q.x_params,
                                q.h_params, cell_scale,
                                {&stats.g_output, "g_output"});

  q.hidden_eff = quantize_multiplier(std::ldexp(1.0, -30) / q.m_params.scale);

  if (model.variant.projection) {
    std::tie(q.projection_weights, q.projection_weight_scale) =
        quantize_symmetric<int8_t>(model.projection_weights);
    const auto bias = quantize_bias(
        model.projection_bias, q.projection_weight_scale * q.m_params.scale);
    q.projection_bias =
        fold_zero_point(q.projection_weights, model.output_dim,
                        model.cell_dim, q.m_params.zero_point, bias);
    q.projection_eff = quantize_multiplier(
        q.projection_weight_scale * q.m_params.scale / q.h_params.scale);
  }
  return q;
}

}  // namespace qlstm
