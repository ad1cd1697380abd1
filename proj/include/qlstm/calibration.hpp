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

#include <span>
#include <string>
#include <vector>

#include "qlstm/fixedpoint.hpp"
#include "qlstm/float_lstm.hpp"

// Post-training statistics collection: runs the float reference over a
// representative dataset, recording per-tensor min/max at the points the
// quantization recipe needs, and converts ranges into quantization
// parameters.

namespace qlstm {

struct TensorStats {
  double min_seen = 0.0;
  double max_seen = 0.0;
  int64_t count = 0;

  // Envelope merge; commutative and associative, so calibration may shard
  // over sequences and merge.
  void merge(const TensorStats& other);
};

// Tracks every tensor the recipe quantizes from measurements. Gate linear
// outputs (g_*) are only populated for layer-norm models; m only under
// projection; g_input never under CIFG.
struct CalibrationStats {
  TensorStats x;
  TensorStats h;
  TensorStats c;
  TensorStats m;
  TensorStats g_input, g_forget, g_update, g_output;

  void merge(const CalibrationStats& other);
};

// int8 asymmetric quantization parameters; real = scale * (q - zero_point).
struct AsymmetricParams {
  double scale = 1.0;
  int zero_point = 0;

  int8_t quantize(double real) const;
  double dequantize(int64_t q) const {
    return scale * static_cast<double>(q - zero_point);
  }

  friend bool operator==(const AsymmetricParams&, const AsymmetricParams&) =
      default;
};

// Extends the envelope with a batch of values. Throws std::domain_error
// naming `label` on non-finite input.
void observe(TensorStats& stats, std::span<const double> values,
             const std::string& label);

// Runs the float reference over every sequence (zero initial state each) and
// gathers the per-tensor envelopes required by `model.variant`.
CalibrationStats calibrate(
    const FloatLstmModel& model,
    const std::vector<std::vector<std::vector<double>>>& dataset);

// range/255 parameters with the range first extended to include zero and the
// zero point nudged onto the integer grid. A degenerate all-zero range falls
// back to scale 1/255.
AsymmetricParams asymmetric_params(double min, double max);

// Widens a measured range to the enclosing power of two and returns the
// 16-bit Q_{m.15-m} format, m >= 0. The scale is 2^m / 32768 exactly.
QFormat pot_extend(double min, double max);

}  // namespace qlstm
