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

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

// Core fixed-point numerics shared by the quantizer and the integer kernel:
// Q-format descriptors, saturating arithmetic, quantized-multiplier rescaling,
// rounded shifts and integer square root. All rounding is round-to-nearest
// with ties away from zero. Everything here is a pure function on value
// types and safe to call concurrently.

namespace qlstm {

// Signed Q_{m.n} fixed-point format: m integer bits, n fractional bits,
// m + n + 1 == width (the sign bit is counted in the width). Representable
// range is [-2^m, 2^m - 2^-n] with resolution 2^-n.
struct QFormat {
  int integer_bits = 0;
  int fractional_bits = 15;
  int width = 16;

  static QFormat make(int integer_bits, int width = 16) {
    if (width != 16 && width != 32) {
      throw std::invalid_argument("QFormat width must be 16 or 32");
    }
    if (integer_bits < 0 || integer_bits > width - 1) {
      throw std::invalid_argument("QFormat integer bits out of range");
    }
    return QFormat{integer_bits, width - 1 - integer_bits, width};
  }

  constexpr int64_t max_raw() const {
    return (int64_t{1} << (width - 1)) - 1;
  }
  constexpr int64_t min_raw() const { return -(int64_t{1} << (width - 1)); }

  // Real value of one quantization step, 2^-n.
  double resolution() const { return std::ldexp(1.0, -fractional_bits); }
  double from_raw(int64_t raw) const {
    return std::ldexp(static_cast<double>(raw), -fractional_bits);
  }

  friend bool operator==(const QFormat&, const QFormat&) = default;
};

// Quantized-multiplier representation of a positive real rescale ratio:
// value == mantissa * 2^(exponent - 31), with mantissa normalized to
// [2^30, 2^31). mantissa == 0 encodes the zero scale.
struct EffectiveScale {
  int32_t mantissa = 0;
  int exponent = 0;

  double value() const {
    return std::ldexp(static_cast<double>(mantissa), exponent - 31);
  }

  friend bool operator==(const EffectiveScale&, const EffectiveScale&) =
      default;
};

// Converts a positive real scale into its quantized-multiplier form.
// The represented value matches `scale` within relative 2^-30.
inline EffectiveScale quantize_multiplier(double scale) {
  if (!std::isfinite(scale) || scale <= 0.0) {
    throw std::invalid_argument("quantize_multiplier: scale must be finite and > 0");
  }
  int exponent = 0;
  const double fraction = std::frexp(scale, &exponent);  // in [0.5, 1)
  auto mantissa = static_cast<int64_t>(std::llround(std::ldexp(fraction, 31)));
  if (mantissa == (int64_t{1} << 31)) {  // rounding hit the upper boundary
    mantissa >>= 1;
    ++exponent;
  }
  return EffectiveScale{static_cast<int32_t>(mantissa), exponent};
}

inline int8_t saturate_i8(int64_t v) {
  if (v > 127) return 127;
  if (v < -128) return -128;
  return static_cast<int8_t>(v);
}

inline int16_t saturate_i16(int64_t v) {
  if (v > 32767) return 32767;
  if (v < -32768) return -32768;
  return static_cast<int16_t>(v);
}

inline int32_t saturate_i32(int64_t v) {
  if (v > std::numeric_limits<int32_t>::max()) {
    return std::numeric_limits<int32_t>::max();
  }
  if (v < std::numeric_limits<int32_t>::min()) {
    return std::numeric_limits<int32_t>::min();
  }
  return static_cast<int32_t>(v);
}

inline int16_t saturating_add_i16(int16_t a, int16_t b) {
  return saturate_i16(int32_t{a} + int32_t{b});
}

// round(v / 2^k), ties away from zero. Valid for 0 <= k <= 62.
inline int64_t rounded_shift_right(int64_t v, int k) {
  if (k == 0) return v;
  const uint64_t mag = v >= 0 ? static_cast<uint64_t>(v)
                              : 0u - static_cast<uint64_t>(v);
  const uint64_t rounded = (mag + (uint64_t{1} << (k - 1))) >> k;
  return v >= 0 ? static_cast<int64_t>(rounded)
                : -static_cast<int64_t>(rounded);
}

inline int32_t rounded_shift_right(int32_t v, int k) {
  return static_cast<int32_t>(rounded_shift_right(int64_t{v}, k));
}

namespace detail {

// Shared core: round(acc * mantissa * 2^(exponent - 31)) saturated to int32.
// The 128-bit intermediate keeps the computation exact for 64-bit
// accumulators (layer-norm feeds those).
inline int32_t rescale_i64(int64_t acc, int32_t mantissa, int exponent) {
  if (mantissa == 0 || acc == 0) return 0;
  __int128 prod = static_cast<__int128>(acc) * mantissa;
  const int shift = 31 - exponent;
  if (shift <= 0) {
    const int up = -shift;
    if (up > 32) return prod > 0 ? std::numeric_limits<int32_t>::max()
                                 : std::numeric_limits<int32_t>::min();
    prod <<= up;
  } else {
    const int down = shift > 126 ? 126 : shift;
    const __int128 half = static_cast<__int128>(1) << (down - 1);
    prod = prod >= 0 ? (prod + half) >> down : -((-prod + half) >> down);
  }
  if (prod > std::numeric_limits<int32_t>::max()) {
    return std::numeric_limits<int32_t>::max();
  }
  if (prod < std::numeric_limits<int32_t>::min()) {
    return std::numeric_limits<int32_t>::min();
  }
  return static_cast<int32_t>(prod);
}

}  // namespace detail

// Saturating round-to-nearest of v * s, ties away from zero. Exact with
// respect to the rational value mantissa * 2^(exponent - 31).
inline int32_t rescale(int32_t v, EffectiveScale s) {
  return detail::rescale_i64(v, s.mantissa, s.exponent);
}

// 64-bit accumulator variant (layer normalization intermediates).
inline int32_t rescale(int64_t v, EffectiveScale s) {
  return detail::rescale_i64(v, s.mantissa, s.exponent);
}

// Fixed-point multiplication of two Q0.31 values: (a * b * 2) / 2^32 with
// rounding, saturating only on the single overflow case INT32_MIN^2.
inline int32_t saturating_rounding_doubling_high_mul(int32_t a, int32_t b) {
  const bool overflow = a == b && a == std::numeric_limits<int32_t>::min();
  const int64_t ab = int64_t{a} * b;
  const int32_t nudge = ab >= 0 ? (1 << 30) : (1 - (1 << 30));
  const auto result = static_cast<int32_t>((ab + nudge) / (int64_t{1} << 31));
  return overflow ? std::numeric_limits<int32_t>::max() : result;
}

// round(x / 2^k) with ties away from zero, branch-light form used inside
// the activation evaluators.
inline int32_t rounding_divide_by_pot(int32_t x, int k) {
  if (k == 0) return x;
  const int32_t sign = x >= 0 ? 1 : -1;
  const int32_t mag = x >= 0 ? x : -x;
  const int32_t mask = static_cast<int32_t>((int64_t{1} << k) - 1);
  const int32_t remainder = mag & mask;
  const int32_t threshold = mask >> 1;
  return sign * ((mag >> k) + (remainder > threshold ? 1 : 0));
}

// floor(sqrt(v)), exact for the whole uint64 range. Digit-by-digit method,
// no floating point involved.
inline uint32_t integer_sqrt(uint64_t v) {
  uint64_t remainder = v;
  uint64_t result = 0;
  uint64_t bit = uint64_t{1} << 62;
  while (bit > v) bit >>= 2;
  while (bit != 0) {
    if (remainder >= result + bit) {
      remainder -= result + bit;
      result = (result >> 1) + bit;
    } else {
      result >>= 1;
    }
    bit >>= 2;
  }
  return static_cast<uint32_t>(result);
}

}  // namespace qlstm
