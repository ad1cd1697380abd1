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
#include "qlstm/fixedpoint.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <doctest.h>

using namespace qlstm;

namespace {

// Independent rational oracle for rescale: round(v * mantissa / 2^(31-e))
// evaluated with exact 128-bit division-based rounding (the implementation
// uses shifts), saturated to int32.
int32_t rescale_oracle(int64_t v, EffectiveScale s) {
  if (s.mantissa == 0) return 0;
  __int128 num = static_cast<__int128>(v) * s.mantissa;
  const int shift = 31 - s.exponent;
  __int128 result;
  if (shift <= 0) {
    result = num << (-shift);
  } else {
    const __int128 den = static_cast<__int128>(1) << shift;
    const __int128 mag = num < 0 ? -num : num;
    const __int128 rounded = (2 * mag + den) / (2 * den);
    result = num < 0 ? -rounded : rounded;
  }
  if (result > std::numeric_limits<int32_t>::max()) {
    return std::numeric_limits<int32_t>::max();
  }
  if (result < std::numeric_limits<int32_t>::min()) {
    return std::numeric_limits<int32_t>::min();
  }
  return static_cast<int32_t>(result);
}

}  // namespace

TEST_CASE("QFormat invariants") {
  const QFormat q312 = QFormat::make(3);
  CHECK(q312.integer_bits == 3);
  CHECK(q312.fractional_bits == 12);
  CHECK(q312.width == 16);
  CHECK(q312.max_raw() == 32767);
  CHECK(q312.min_raw() == -32768);
  CHECK(q312.resolution() == doctest::Approx(1.0 / 4096.0));
  CHECK_THROWS_AS(QFormat::make(-1), std::invalid_argument);
  CHECK_THROWS_AS(QFormat::make(16, 16), std::invalid_argument);
  CHECK_THROWS_AS(QFormat::make(3, 24), std::invalid_argument);
}

TEST_CASE("quantize_multiplier representative values") {
  const EffectiveScale half = quantize_multiplier(0.5);
  CHECK(half.mantissa == (1 << 30));
  CHECK(half.exponent == 0);

  const EffectiveScale one = quantize_multiplier(1.0);
  CHECK(one.mantissa == (1 << 30));
  CHECK(one.exponent == 1);

  // 3 * 2^-12 is exactly representable: mantissa 0.75 * 2^31, exponent -10.
  const EffectiveScale s = quantize_multiplier(3.0 * std::ldexp(1.0, -12));
  CHECK(s.mantissa == 1610612736);
  CHECK(s.exponent == -10);
  CHECK(s.value() == 3.0 * std::ldexp(1.0, -12));
}

TEST_CASE("quantize_multiplier rejects invalid scales") {
  CHECK_THROWS_AS(quantize_multiplier(0.0), std::invalid_argument);
  CHECK_THROWS_AS(quantize_multiplier(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(quantize_multiplier(std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(quantize_multiplier(std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("quantize_multiplier round-trips within 2^-30 relative") {
  std::mt19937 rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double exponent = (rng() * 0x1p-32) * 40.0 - 20.0;
    const double s = std::exp2(exponent);
    const EffectiveScale q = quantize_multiplier(s);
    CHECK(q.mantissa >= (1 << 30));
    CHECK(std::abs(q.value() - s) / s <= std::ldexp(1.0, -30));
  }
}

TEST_CASE("rescale on simple ratios") {
  CHECK(rescale(int32_t{1000}, quantize_multiplier(0.5)) == 500);
  CHECK(rescale(int32_t{-1000}, quantize_multiplier(0.5)) == -500);
  // 32767^2 * 2^-15 = 32766.00003: the exact rational value rounds to 32766.
  const int32_t v = 32767 * 32767;
  CHECK(rescale(v, quantize_multiplier(std::ldexp(1.0, -15))) == 32766);
}

TEST_CASE("rescale saturates and handles the zero scale") {
  const EffectiveScale big = quantize_multiplier(std::ldexp(1.0, 10));
  CHECK(rescale(int32_t{1 << 24}, big) == std::numeric_limits<int32_t>::max());
  CHECK(rescale(int32_t{-(1 << 24)}, big) ==
        std::numeric_limits<int32_t>::min());
  CHECK(rescale(int32_t{12345}, EffectiveScale{0, 0}) == 0);
}

TEST_CASE("rescale matches the rational oracle") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000000; ++i) {
    const auto v = static_cast<int32_t>(rng());
    const double exponent = (rng() * 0x1p-64) * 40.0 - 20.0;
    const EffectiveScale s = quantize_multiplier(std::exp2(exponent));
    const int32_t got = rescale(v, s);
    const int32_t want = rescale_oracle(v, s);
    REQUIRE(std::abs(int64_t{got} - want) <= 1);
  }
}

TEST_CASE("rescale of 64-bit accumulators matches the oracle") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200000; ++i) {
    const auto v = static_cast<int64_t>(rng()) >> 12;  // keep within 2^52
    const double exponent = (rng() * 0x1p-64) * 60.0 - 40.0;
    const EffectiveScale s = quantize_multiplier(std::exp2(exponent));
    REQUIRE(rescale(v, s) == rescale_oracle(v, s));
  }
}

TEST_CASE("rounded_shift_right rounds ties away from zero") {
  CHECK(rounded_shift_right(int32_t{5}, 1) == 3);
  CHECK(rounded_shift_right(int32_t{-5}, 1) == -3);
  CHECK(rounded_shift_right(int32_t{4}, 2) == 1);
  CHECK(rounded_shift_right(int32_t{3}, 2) == 1);
  CHECK(rounded_shift_right(int32_t{2}, 2) == 1);  // 0.5 -> 1
  CHECK(rounded_shift_right(int32_t{1}, 2) == 0);
  CHECK(rounded_shift_right(int32_t{0}, 5) == 0);
  CHECK(rounded_shift_right(int64_t{1} << 40, 40) == 1);
}

TEST_CASE("rounded_shift_right is odd") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 100000; ++i) {
    const auto v = static_cast<int64_t>(rng()) >> 8;
    const int k = static_cast<int>(rng() % 40);
    CHECK(rounded_shift_right(v, k) == -rounded_shift_right(-v, k));
  }
}

TEST_CASE("saturating casts clamp to the target width") {
  CHECK(saturate_i16(40000) == 32767);
  CHECK(saturate_i16(-40000) == -32768);
  CHECK(saturate_i8(100) == 100);
  CHECK(saturate_i8(300) == 127);
  CHECK(saturate_i8(-300) == -128);
  CHECK(saturate_i32(int64_t{1} << 40) == std::numeric_limits<int32_t>::max());
  CHECK(saturate_i32(-(int64_t{1} << 40)) ==
        std::numeric_limits<int32_t>::min());
  CHECK(saturating_add_i16(30000, 30000) == 32767);
  CHECK(saturating_add_i16(-30000, -30000) == -32768);
  CHECK(saturating_add_i16(-5, 12) == 7);
}

TEST_CASE("integer_sqrt floors exactly") {
  CHECK(integer_sqrt(0) == 0);
  CHECK(integer_sqrt(16) == 4);
  CHECK(integer_sqrt(10) == 3);
  CHECK(integer_sqrt(std::numeric_limits<uint64_t>::max()) == 0xFFFFFFFFu);

  for (uint64_t v = 0; v < (1u << 20); ++v) {
    const uint64_t r = integer_sqrt(v);
    REQUIRE(r * r <= v);
    REQUIRE((r + 1) * (r + 1) > v);
  }
  std::mt19937_64 rng(19);
  for (int i = 0; i < 100000; ++i) {
    const uint64_t v = rng();
    const uint64_t r = integer_sqrt(v);
    REQUIRE(r * r <= v);
    const unsigned __int128 next = (static_cast<unsigned __int128>(r) + 1) *
                                   (static_cast<unsigned __int128>(r) + 1);
    REQUIRE(next > v);
  }
}

TEST_CASE("saturating_rounding_doubling_high_mul basics") {
  // 0.5 * 0.5 = 0.25 in Q0.31.
  CHECK(saturating_rounding_doubling_high_mul(1 << 30, 1 << 30) == (1 << 29));
  CHECK(saturating_rounding_doubling_high_mul(
            std::numeric_limits<int32_t>::min(),
            std::numeric_limits<int32_t>::min()) ==
        std::numeric_limits<int32_t>::max());
  CHECK(rounding_divide_by_pot(5, 1) == 3);
  CHECK(rounding_divide_by_pot(-5, 1) == -3);
  CHECK(rounding_divide_by_pot(4, 2) == 1);
}
