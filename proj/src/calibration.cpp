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
#include "qlstm/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qlstm {

void TensorStats::merge(const TensorStats& other) {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  min_seen = std::min(min_seen, other.min_seen);
  max_seen = std::max(max_seen, other.max_seen);
  count += other.count;
}

void CalibrationStats::merge(const CalibrationStats& other) {
  x.merge(other.x);
  h.merge(other.h);
  c.merge(other.c);
  m.merge(other.m);
  g_input.merge(other.g_input);
  g_forget.merge(other.g_forget);
  g_update.merge(other.g_update);
  g_output.merge(other.g_output);
}

int8_t AsymmetricParams::quantize(double real) const {
  const double q = std::round(real / scale) + zero_point;
  return saturate_i8(static_cast<int64_t>(q));
}

void observe(TensorStats& stats, std::span<const double> values,
             const std::string& label) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::domain_error("non-finite value observed in tensor '" + label + "'");
    }
  }
  if (values.empty()) return;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  if (stats.count == 0) {
    stats.min_seen = *lo;
    stats.max_seen = *hi;
  } else {
    stats.min_seen = std::min(stats.min_seen, *lo);
    stats.max_seen = std::max(stats.max_seen, *hi);
  }
  stats.count += static_cast<int64_t>(values.size());
}

CalibrationStats calibrate(
    const FloatLstmModel& model,
    const std::vector<std::vector<std::vector<double>>>& dataset) {
  model.validate();
  if (dataset.empty()) {
    throw std::runtime_error("calibrate: no statistics collected (empty dataset)");
  }
  CalibrationStats stats;
  FloatStepTrace trace;
  for (const auto& sequence : dataset) {
    FloatLstmState state = FloatLstmState::zero(model);
    for (const auto& x : sequence) {
      observe(stats.x, x, "x");
      float_cell_step(model, x, state, &trace);
      observe(stats.h, state.h, "h");
      observe(stats.c, state.c, "c");
      if (model.variant.projection) {
        observe(stats.m, trace.hidden_pre_projection, "m");
      }
      if (model.variant.layer_norm) {
        if (!model.variant.cifg) {
          observe(stats.g_input, trace.gate_linear_input, "g_input");
        }
        observe(stats.g_forget, trace.gate_linear_forget, "g_forget");
        observe(stats.g_update, trace.gate_linear_update, "g_update");
        observe(stats.g_output, trace.gate_linear_output, "g_output");
      }
    }
  }
  if (stats.x.count == 0) {
    throw std::runtime_error("calibrate: no statistics collected (all sequences empty)");
  }
  return stats;
}

AsymmetricParams asymmetric_params(double min, double max) {
  if (!(min <= max)) {
    throw std::invalid_argument("asymmetric_params: min must be <= max");
  }
  // The range always contains zero so that real 0.0 lands on the grid.
  min = std::min(min, 0.0);
  max = std::max(max, 0.0);
  if (min == 0.0 && max == 0.0) {
    return AsymmetricParams{1.0 / 255.0, -128};
  }
  const double scale = (max - min) / 255.0;
  const auto zero_point =
      static_cast<int>(std::llround(-128.0 - min / scale));
  return AsymmetricParams{scale, std::clamp(zero_point, -128, 127)};
}

QFormat pot_extend(double min, double max) {
  if (!(min <= max)) {
    throw std::invalid_argument("pot_extend: min must be <= max");
  }
  const double bound = std::max(std::abs(min), std::abs(max));
  if (bound == 0.0) return QFormat::make(0, 16);
  const int m = std::max(0, static_cast<int>(std::ceil(std::log2(bound))));
  if (m > 15) {
    throw std::invalid_argument("pot_extend: measured range exceeds 16-bit fixed point");
  }
  return QFormat::make(m, 16);
}

}  // namespace qlstm
