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

#include "qlstm/fixedpoint.hpp"

// Lookup-table-free fixed-point sigmoid and tanh on int16 inputs. Inputs are
// Q_{m.15-m} with 0 <= m <= 6; outputs are always Q_{0.15}. The evaluation
// path is branch-free in the input value (mask selects only) so it
// vectorizes and runs in uniform time.
//
// Internally the input is widened to Q0.31, exp(-t) is evaluated by a
// degree-4 polynomial on [-1/4, 0) composed with a mask-selected product of
// exp(-2^k) constants, and the output is formed through Newton-Raphson
// reciprocal iterations. Accuracy (dequantized, exhaustive over int16 at
// Q_{3.12}): tanh within 3e-4, sigmoid within 1.5e-4 of the real function.

namespace qlstm {

enum class ActivationKind { kSigmoid, kTanh };

// tanh(q * 2^-(15-m)) in Q_{0.15}. Output is in [-32768, 32767]; monotone
// non-decreasing in q.
int16_t fixed_tanh(int16_t q, QFormat format);

// sigmoid(q * 2^-(15-m)) in Q_{0.15}. Output is in [0, 32767]; monotone
// non-decreasing in q.
int16_t fixed_sigmoid(int16_t q, QFormat format);

// Error budget of a Q_{m.15-m} input format, used to document the choice of
// m = 3: clamping error f(inf) - f(2^m) against the resolution error
// 2^-(15-m) * max f'.
struct ActivationErrorBudget {
  double clamping_error = 0.0;
  double resolution_error = 0.0;
};

ActivationErrorBudget activation_error_sweep(ActivationKind kind,
                                             int integer_bits);

}  // namespace qlstm
