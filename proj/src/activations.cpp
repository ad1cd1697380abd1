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
#include "qlstm/activations.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

// The evaluators below must stay free of floating-point arithmetic: the
// integer kernel calls them on its hot path. activation_error_sweep is a
// reporting utility and exempt, so the poison pragma sits after it.

namespace qlstm {

ActivationErrorBudget activation_error_sweep(ActivationKind kind,
                                             int integer_bits) {
  if (integer_bits < 0 || integer_bits > 6) {
    throw std::invalid_argument("activation_error_sweep: integer bits must be in [0, 6]");
  }
  const double edge = std::ldexp(1.0, integer_bits);  // 2^m
  const double resolution = std::ldexp(1.0, -(15 - integer_bits));
  ActivationErrorBudget budget;
  if (kind == ActivationKind::kTanh) {
    budget.clamping_error = 1.0 - std::tanh(edge);
    budget.resolution_error = resolution;  // max tanh' = 1 at 0
  } else {
    budget.clamping_error = 1.0 - 1.0 / (1.0 + std::exp(-edge));
    budget.resolution_error = 0.25 * resolution;  // max sigmoid' = 1/4 at 0
  }
  return budget;
}

}  // namespace qlstm

#pragma GCC poison float double

namespace qlstm {
namespace {

using std::int32_t;
using std::int64_t;

constexpr int32_t kInt32Max = std::numeric_limits<int32_t>::max();

// Q0.31 constants, value = raw * 2^-31 (Q2.29 where noted).
constexpr int32_t kExpMinusEighth = 1895147668;   // exp(-1/8)
constexpr int32_t kOneThird = 715827883;          // 1/3
constexpr int32_t k48Over17Q2 = 1515870810;       // 48/17 in Q2.29
constexpr int32_t kNeg32Over17Q2 = -1010580540;   // -32/17 in Q2.29

inline int32_t select(int32_t mask, int32_t then_value, int32_t else_value) {
  return (mask & then_value) | (~mask & else_value);
}

inline int32_t mask_if_zero(int32_t v) { return v == 0 ? -1 : 0; }

inline int32_t mul_q31(int32_t a, int32_t b) {
  return saturating_rounding_doubling_high_mul(a, b);
}

// exp(a) for a in [-1/4, 0), both operand and result in Q0.31. Degree-4
// expansion around -1/8.
inline int32_t exp_on_quarter_interval(int32_t a) {
  const int32_t x = a + (1 << 28);  // a + 1/8, in [-1/8, 1/8)
  const int32_t x2 = mul_q31(x, x);
  const int32_t x3 = mul_q31(x2, x);
  const int32_t x4 = mul_q31(x2, x2);
  const int32_t x4_over_4 = rounding_divide_by_pot(x4, 2);
  const int32_t tail = rounding_divide_by_pot(
      mul_q31(x4_over_4 + x3, kOneThird) + x2, 1);
  return kExpMinusEighth + mul_q31(kExpMinusEighth, x + tail);
}

// exp(a) for a <= 0 given in Q5.26, result in Q0.31. The fractional quarter
// goes through the polynomial; each integer-power-of-two part multiplies in
// the matching exp(-2^k) constant, selected by mask.
inline int32_t exp_on_negative_values_q5_26(int32_t a) {
  constexpr int32_t kQuarterMask = (1 << 24) - 1;
  const int32_t a_mod = (a & kQuarterMask) - (1 << 24);  // in [-1/4, 0)
  int32_t result = exp_on_quarter_interval(a_mod << 5);  // rescale to Q0.31
  const int32_t remainder = a_mod - a;  // >= 0 for a < 0

  struct Stage {
    int bit;
    int32_t multiplier;
  };
  constexpr Stage kStages[] = {
      {24, 1672461947},  // exp(-1/4)
      {25, 1302514674},  // exp(-1/2)
      {26, 790015084},   // exp(-1)
      {27, 290630308},   // exp(-2)
      {28, 39332535},    // exp(-4)
      {29, 720401},      // exp(-8)
      {30, 242},         // exp(-16)
  };
  for (const Stage& stage : kStages) {
    const int32_t mask = -((remainder >> stage.bit) & 1);
    result = select(mask, mul_q31(result, stage.multiplier), result);
  }
  return select(mask_if_zero(a), kInt32Max, result);
}

// Newton-Raphson reciprocal of hd in [1/2, 1] (Q0.31); returns 1/hd in
// [1, 2] as Q2.29.
inline int32_t reciprocal_q2_29(int32_t hd) {
  // F0 * F2 multiply keeps 29 fractional bits; F2 * F2 drops to 27.
  int32_t x = k48Over17Q2 + mul_q31(hd, kNeg32Over17Q2);
  for (int i = 0; i < 3; ++i) {
    const int32_t hd_times_x = mul_q31(hd, x);                // Q2.29
    const int32_t one_minus = (1 << 29) - hd_times_x;         // Q2.29
    const int32_t correction = mul_q31(x, one_minus);         // Q4.27
    x = x + saturate_i32(int64_t{correction} << 2);           // back to Q2.29
  }
  return x;
}

inline int32_t rounding_half_sum(int32_t a, int32_t b) {
  return static_cast<int32_t>((int64_t{a} + b + 1) >> 1);
}

// (1 - e) / (1 + e) in Q0.31 for e in [0, 1] (Q0.31). With hd = (1+e)/2 and
// r = 1/hd this is r - 1.
inline int32_t one_minus_over_one_plus(int32_t e) {
  const int32_t hd = rounding_half_sum(e, kInt32Max);
  const int32_t r = reciprocal_q2_29(hd);
  return saturate_i32(int64_t{r - (1 << 29)} << 2);
}

// 1 / (1 + e) in Q0.31 for e in [0, 1] (Q0.31): r / 2.
inline int32_t one_over_one_plus(int32_t e) {
  const int32_t hd = rounding_half_sum(e, kInt32Max);
  const int32_t r = reciprocal_q2_29(hd);
  return saturate_i32(int64_t{r} << 1);
}

inline void check_format(const QFormat& format) {
  if (format.width != 16 || format.integer_bits < 0 ||
      format.integer_bits > 6) {
    throw std::invalid_argument("activation input must be Q_{m.15-m} with 0 <= m <= 6");
  }
}

// -(scale_shift * |q|) expressed in Q5.26, saturated at -32. Values below
// -32 are indistinguishable from -inf at the output resolution.
inline int32_t negated_input_q5_26(int32_t abs_q, int shift) {
  const int64_t t = -(int64_t{abs_q} << shift);
  const int64_t lower = std::numeric_limits<int32_t>::min();
  return static_cast<int32_t>(t < lower ? lower : t);
}

}  // namespace

int16_t fixed_tanh(int16_t q, QFormat format) {
  check_format(format);
  const int32_t qi = q;
  const int32_t neg_mask = qi >> 31;
  const int32_t abs_q = (qi ^ neg_mask) - neg_mask;
  // exp argument is -2|x|; |x| = abs_q * 2^-(15-m).
  const int32_t a = negated_input_q5_26(abs_q, 12 + format.integer_bits);
  const int32_t e = exp_on_negative_values_q5_26(a);
  const int32_t t = one_minus_over_one_plus(e);  // tanh(|x|), Q0.31
  const int32_t out = rounding_divide_by_pot(t, 16);
  return saturate_i16(select(neg_mask, -out, out));
}

int16_t fixed_sigmoid(int16_t q, QFormat format) {
  check_format(format);
  const int32_t qi = q;
  const int32_t neg_mask = qi >> 31;
  const int32_t abs_q = (qi ^ neg_mask) - neg_mask;
  const int32_t a = negated_input_q5_26(abs_q, 11 + format.integer_bits);
  const int32_t e = exp_on_negative_values_q5_26(a);
  const int32_t positive = one_over_one_plus(e);  // sigmoid(|x|), Q0.31
  const int32_t value = select(neg_mask, kInt32Max - positive, positive);
  return saturate_i16(rounding_divide_by_pot(value, 16));
}

}  // namespace qlstm
