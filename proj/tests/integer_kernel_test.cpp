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

#include <cmath>
#include <random>

#include <doctest.h>

#include "qlstm/activations.hpp"
#include "qlstm/toolkit.hpp"

using namespace qlstm;

namespace {

QuantizedGate gate_with_effs(EffectiveScale in, EffectiveScale rec,
                             EffectiveScale peep) {
  QuantizedGate g;
  g.input_eff = in;
  g.recurrent_eff = rec;
  g.peephole_eff = peep;
  return g;
}

}  // namespace

TEST_CASE("matvec_i8 accumulates with the folded bias") {
  const std::vector<int8_t> w{3};
  const std::vector<int8_t> v{5};
  const std::vector<int32_t> bias{1};
  CHECK(matvec_i8(w, 1, 1, v, bias)[0] == 16);

  const std::vector<int8_t> zeros(6, 0);
  const std::vector<int8_t> x{1, 2, 3};
  const std::vector<int32_t> b{7, -9};
  const auto out = matvec_i8(zeros, 2, 3, x, b);
  CHECK(out[0] == 7);
  CHECK(out[1] == -9);
}

TEST_CASE("matvec_i8 matches a widening oracle") {
  std::mt19937 rng(71);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 8, cols = 8;
    std::vector<int8_t> w(rows * cols), v(cols);
    std::vector<int32_t> bias(rows);
    for (auto& u : w) u = static_cast<int8_t>(rng());
    for (auto& u : v) u = static_cast<int8_t>(rng());
    for (auto& u : bias) u = static_cast<int32_t>(rng() % 100000) - 50000;
    const auto got = matvec_i8(w, rows, cols, v, bias);
    for (int r = 0; r < rows; ++r) {
      int64_t want = bias[r];
      for (int j = 0; j < cols; ++j) want += int64_t{w[size_t(r) * cols + j]} * v[j];
      REQUIRE(got[r] == want);
    }
  }
}

TEST_CASE("matvec_i8 rejects unsafe depth") {
  const int cols = (1 << 15) + 1;
  std::vector<int8_t> w(cols, 1), v(cols, 1);
  std::vector<int32_t> bias{0};
  CHECK_THROWS_AS(matvec_i8(w, 1, cols, v, bias), std::invalid_argument);
  // Exactly 2^15 is the documented safe bound and is accepted.
  std::vector<int8_t> w2(1 << 15, 1), v2(1 << 15, 1);
  CHECK(matvec_i8(w2, 1, 1 << 15, v2, bias)[0] == (1 << 15));
}

TEST_CASE("elementwise_mul_i16 widens exactly") {
  const std::vector<int16_t> a{32767}, b{32767};
  CHECK(elementwise_mul_i16(a, b)[0] == 1073676289);
  const std::vector<int16_t> z{12345}, zero{0};
  CHECK(elementwise_mul_i16(z, zero)[0] == 0);

  std::mt19937 rng(73);
  std::vector<int16_t> p(64), q(64);
  for (auto& v : p) v = static_cast<int16_t>(rng());
  for (auto& v : q) v = static_cast<int16_t>(rng());
  const auto out = elementwise_mul_i16(p, q);
  for (int i = 0; i < 64; ++i) REQUIRE(out[i] == int64_t{p[i]} * q[i]);
}

TEST_CASE("gate_pre_activation rescales then saturating-adds") {
  const EffectiveScale unity = quantize_multiplier(1.0);
  auto gate = gate_with_effs(unity, unity, unity);

  GateAccumulators accs;
  accs.from_input = {0};
  accs.from_recurrent = {0};
  CHECK(gate_pre_activation(accs, gate)[0] == 0);

  // An accumulator whose rescaled value is 4096 lands on +1.0 in Q_{3.12}.
  accs.from_recurrent = {4096};
  CHECK(gate_pre_activation(accs, gate)[0] == 4096);

  // Values beyond +8 pin at the int16 ceiling.
  accs.from_input = {40000};
  accs.from_recurrent = {40000};
  CHECK(gate_pre_activation(accs, gate)[0] == 32767);

  // Each accumulator saturates independently before the int16 adds:
  // sat16(40000) + sat16(40000) -> 32767, then + sat16(-100000) -> -1.
  accs.from_cell = {-100000};
  CHECK(gate_pre_activation(accs, gate)[0] == -1);
}

TEST_CASE("layer_norm_integer against hand-checked vectors") {
  // Unit coefficient setup: s_L such that q_L * s_L = 1 exactly.
  QuantizedGate gate;
  const double s_l = 1.0 / 16384.0;
  gate.ln_coeff_scale = s_l;
  gate.ln_eff = quantize_multiplier(std::ldexp(s_l, -10) / std::ldexp(1.0, -12));

  SUBCASE("constant input returns the rescaled bias") {
    gate.ln_coeff = {16384, 16384};
    gate.ln_bias = {50000, -123456};
    const std::vector<int16_t> q{777, 777};
    const auto out = layer_norm_integer(q, gate);
    CHECK(out[0] == rescale(int64_t{50000}, gate.ln_eff));
    CHECK(out[1] == rescale(int64_t{-123456}, gate.ln_eff));
  }

  SUBCASE("antisymmetric pair maps to +-1") {
    gate.ln_coeff = {16384, 16384};
    gate.ln_bias = {0, 0};
    for (int16_t a : {int16_t{200}, int16_t{4096}, int16_t{30000}}) {
      const std::vector<int16_t> q{a, static_cast<int16_t>(-a)};
      const auto out = layer_norm_integer(q, gate);
      // +-1.0 in Q_{3.12} within 2 steps.
      CHECK(std::abs(out[0] - 4096) <= 2);
      CHECK(std::abs(out[1] + 4096) <= 2);
    }
  }

  SUBCASE("three-point ramp matches the float oracle") {
    gate.ln_coeff = {16384, 16384, 16384};
    gate.ln_bias = {0, 0, 0};
    const std::vector<int16_t> q{0, 2000, 4000};
    const auto out = layer_norm_integer(q, gate);
    const double expected = std::sqrt(3.0 / 2.0);  // (x - mean)/sd of ramp
    CHECK(std::abs(out[0] / 4096.0 + expected) <= 3.0 / 4096.0);
    CHECK(std::abs(out[1] / 4096.0) <= 3.0 / 4096.0);
    CHECK(std::abs(out[2] / 4096.0 - expected) <= 3.0 / 4096.0);
  }
}

TEST_CASE("layer_norm_integer tracks float_layer_norm on random vectors") {
  std::mt19937 rng(79);
  for (int n : {8, 32, 128}) {
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<int16_t> q(n);
      for (auto& v : q) v = static_cast<int16_t>(rng());
      std::vector<double> coeff(n), bias(n);
      for (auto& v : coeff) v = 0.5 + (rng() * 0x1p-32);
      for (auto& v : bias) v = (rng() * 0x1p-32) * 2.0 - 1.0;

      QuantizedGate gate;
      auto [lq, ls] = quantize_symmetric<int16_t>(coeff);
      gate.ln_coeff = std::move(lq);
      gate.ln_coeff_scale = ls;
      gate.ln_bias = quantize_bias(bias, std::ldexp(ls, -10));
      gate.ln_eff =
          quantize_multiplier(std::ldexp(ls, -10) / std::ldexp(1.0, -12));

      std::vector<double> x(q.begin(), q.end());
      std::vector<double> coeff_deq(n), bias_deq(n);
      for (int i = 0; i < n; ++i) {
        coeff_deq[i] = ls * gate.ln_coeff[i];
        bias_deq[i] = std::ldexp(ls, -10) * gate.ln_bias[i];
      }
      const auto want = float_layer_norm(x, coeff_deq, bias_deq);
      const auto got = layer_norm_integer(q, gate);
      for (int i = 0; i < n; ++i) {
        REQUIRE(std::abs(got[i] / 4096.0 - want[i]) <= 4.0 / 4096.0);
      }
    }
  }
}

TEST_CASE("layer_norm_integer cancels a factor-two input scaling") {
  QuantizedGate gate;
  const double s_l = 1.0 / 20000.0;
  gate.ln_coeff_scale = s_l;
  gate.ln_eff = quantize_multiplier(std::ldexp(s_l, -10) / std::ldexp(1.0, -12));
  std::mt19937 rng(83);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 16;
    std::vector<int16_t> q(n), q2(n);
    for (int i = 0; i < n; ++i) {
      const auto v = static_cast<int16_t>(static_cast<int>(rng() % 30000) - 15000);
      q[i] = v;
      q2[i] = static_cast<int16_t>(2 * v);
    }
    gate.ln_coeff.assign(n, 15000);
    gate.ln_bias.assign(n, 0);
    const auto a = layer_norm_integer(q, gate);
    const auto b = layer_norm_integer(q2, gate);
    for (int i = 0; i < n; ++i) REQUIRE(std::abs(a[i] - b[i]) <= 1);
  }
}

TEST_CASE("cifg_input_gate couples and clamps") {
  const std::vector<int16_t> f{0, 32767, 16384};
  const auto i = cifg_input_gate(f);
  CHECK(i[0] == 32767);  // clamped so the value fits int16
  CHECK(i[1] == 1);      // lower end of [1/32768, 32767/32768]
  CHECK(i[2] == 16384);

  std::mt19937 rng(89);
  for (int trial = 0; trial < 100000; ++trial) {
    const auto fq = static_cast<int16_t>(rng() % 32768);
    const auto iq = cifg_input_gate(std::vector<int16_t>{fq})[0];
    const int sum = int{iq} + fq;
    REQUIRE(iq >= 1);
    REQUIRE((sum == 32767 || sum == 32768));
  }
}

TEST_CASE("cell_update combines the two shifted products") {
  // i = z = 32767, f = 0, m = 4: round(32767^2 / 2^19) = round(2047.998) =
  // 2048, exactly +1.0 in Q_{4.11}.
  {
    const std::vector<int16_t> i{32767}, z{32767}, f{0}, c{0};
    CHECK(cell_update(i, z, f, c, QFormat::make(4))[0] == 2048);
  }
  // i = 0, f = 32767, c = 1000: round(32767000 / 32768) = round(999.97) =
  // 1000 under round-to-nearest.
  {
    const std::vector<int16_t> i{0}, z{0}, f{32767}, c{1000};
    CHECK(cell_update(i, z, f, c, QFormat::make(4))[0] == 1000);
  }
  // f ~= 1 with c at the ceiling saturates.
  {
    const std::vector<int16_t> i{20000}, z{20000}, f{32767}, c{32767};
    CHECK(cell_update(i, z, f, c, QFormat::make(4))[0] == 32767);
  }
  // Rational oracle over random inputs.
  std::mt19937 rng(97);
  for (int trial = 0; trial < 20000; ++trial) {
    const std::vector<int16_t> iq{static_cast<int16_t>(rng() % 32768)};
    const std::vector<int16_t> fq{static_cast<int16_t>(rng() % 32768)};
    const std::vector<int16_t> zq{static_cast<int16_t>(rng())};
    const std::vector<int16_t> cq{static_cast<int16_t>(rng())};
    const int m = static_cast<int>(rng() % 7);
    const auto got = cell_update(iq, zq, fq, cq, QFormat::make(m))[0];
    const int64_t want_write =
        rounded_shift_right(int64_t{iq[0]} * zq[0], 15 + m);
    const int64_t want_keep = rounded_shift_right(int64_t{fq[0]} * cq[0], 15);
    REQUIRE(got == saturate_i16(want_write + want_keep));
  }
}

TEST_CASE("hidden_update applies tanh, rescale and zero point") {
  const QFormat q411 = QFormat::make(4);
  // o = 0 leaves only the zero point.
  {
    const std::vector<int16_t> o{0, 0}, c{1234, -4321};
    const auto m = hidden_update(o, c, q411, quantize_multiplier(0.5), -7);
    CHECK(m[0] == -7);
    CHECK(m[1] == -7);
  }
  // Saturated tanh with s_m = 1/128: rescale yields 128 which clips to 127.
  {
    const std::vector<int16_t> o{32767}, c{32767};
    const EffectiveScale eff = quantize_multiplier(std::ldexp(1.0, -30) * 128.0);
    CHECK(hidden_update(o, c, q411, eff, 0)[0] == 127);
  }
  // Tracks the float computation on the dequantized inputs within one step.
  std::mt19937 rng(101);
  const double s_m = 2.0 / 255.0;
  const EffectiveScale eff = quantize_multiplier(std::ldexp(1.0, -30) / s_m);
  for (int trial = 0; trial < 5000; ++trial) {
    const std::vector<int16_t> o{static_cast<int16_t>(rng() % 32768)};
    const std::vector<int16_t> c{static_cast<int16_t>(rng())};
    const auto got = hidden_update(o, c, q411, eff, 3)[0];
    const double product = (o[0] / 32768.0) *
                           std::tanh(std::ldexp(static_cast<double>(c[0]), -11));
    const auto want = saturate_i8(std::llround(product / s_m) + 3);
    REQUIRE(std::abs(int{got} - want) <= 1);
  }
}

TEST_CASE("projection_step folds, rescales and offsets") {
  {
    const std::vector<int8_t> w(4, 0);
    const std::vector<int8_t> m{1, 2};
    const std::vector<int32_t> b{0, 0};
    const auto h =
        projection_step(w, 2, 2, m, b, quantize_multiplier(1.0), 5);
    CHECK(h[0] == 5);
    CHECK(h[1] == 5);
  }
  {
    // Identity: eff = 1, w = 1, folded m - zp = 50.
    const std::vector<int8_t> w{1};
    const std::vector<int8_t> m{60};
    const std::vector<int32_t> folded{-10};  // -zp_m * rowsum = -10
    CHECK(projection_step(w, 1, 1, m, folded, quantize_multiplier(1.0), 0)[0] ==
          50);
  }
  // Tracks float on dequantized integer weights within one step.
  std::mt19937 rng(103);
  for (int trial = 0; trial < 500; ++trial) {
    const int rows = 8, cols = 8;
    std::vector<int8_t> w(rows * cols), m(cols);
    for (auto& v : w) v = static_cast<int8_t>(rng());
    for (auto& v : m) v = static_cast<int8_t>(rng());
    const int zp_m = static_cast<int>(rng() % 32) - 16;
    const int zp_h = static_cast<int>(rng() % 32) - 16;
    const double s_w = 0.4 / 127.0, s_m = 1.7 / 255.0, s_h = 1.9 / 255.0;
    const EffectiveScale eff = quantize_multiplier(s_w * s_m / s_h);
    const auto bias = std::vector<int32_t>(rows, 0);
    const auto folded = fold_zero_point(w, rows, cols, zp_m, bias);
    const auto h = projection_step(w, rows, cols, m, folded, eff, zp_h);
    for (int r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (int j = 0; j < cols; ++j) {
        acc += (s_w * w[size_t(r) * cols + j]) * (s_m * (m[j] - zp_m));
      }
      const auto want = saturate_i8(std::llround(acc / s_h) + zp_h);
      REQUIRE(std::abs(int{h[r]} - want) <= 1);
    }
  }
}

TEST_CASE("integer_cell_step on the zero model") {
  FloatLstmModel model;
  model.input_dim = model.cell_dim = model.output_dim = 2;
  auto zero_gate = [] {
    return FloatGateWeights{{0, 0, 0, 0}, {0, 0, 0, 0}, {}, {0, 0}, {}};
  };
  model.input_gate = zero_gate();
  model.forget_gate = zero_gate();
  model.update_gate = zero_gate();
  model.output_gate = zero_gate();
  CalibrationStats stats;
  stats.x = {-1.0, 1.0, 1};
  stats.h = {-1.0, 1.0, 1};
  stats.c = {0.0, 0.0, 1};
  const auto q = build_quantized_model(model, stats);

  IntLstmState state = IntLstmState::zero(q);
  IntStepScratch scratch;
  integer_cell_step(q, std::vector<int8_t>{5, -5}, state, &scratch);
  // Gates sit at sigmoid(0) = 16384, z = tanh(0) = 0, so c' = 0 and the
  // hidden output dequantizes to 0.
  CHECK(scratch.gate_forget[0] == 16384);
  CHECK(scratch.gate_output[0] == 16384);
  CHECK(scratch.gate_update[0] == 0);
  CHECK(state.c_q[0] == 0);
  CHECK(q.h_params.dequantize(state.h_q[0]) == 0.0);
}

TEST_CASE("integer memory retention tracks the float cell") {
  // f ~= 1, i ~= 0: cell decays by at most one step per timestep.
  auto model = generate_model({}, 1, 1, 1, 301);
  model.forget_gate.bias[0] = 10.0;
  model.input_gate.bias[0] = -10.0;
  model.forget_gate.w_input[0] = model.input_gate.w_input[0] = 0.0;
  model.forget_gate.w_recurrent[0] = model.input_gate.w_recurrent[0] = 0.0;
  model.update_gate.w_input[0] = 0.1;

  Dataset dataset{{}};
  for (int t = 0; t < 100; ++t) dataset[0].push_back({t < 5 ? 1.0 : 0.0});
  const auto stats = calibrate(model, dataset);
  const auto q = build_quantized_model(model, stats);

  const auto float_states =
      float_sequence_run(model, dataset[0], FloatLstmState::zero(model));
  const auto x_q = quantize_inputs(q, dataset[0]);
  const auto int_states = integer_sequence_run(q, x_q, IntLstmState::zero(q));

  const double cell_step = q.cell_format.resolution();
  for (size_t t = 0; t < dataset[0].size(); ++t) {
    const double c_int = q.cell_format.from_raw(int_states[t].c_q[0]);
    REQUIRE(std::abs(c_int - float_states[t].c[0]) <=
            cell_step * static_cast<double>(t + 2));
  }
}

TEST_CASE("integer_cell_step is deterministic") {
  const auto model = generate_model({true, true, true, false}, 4, 8, 4, 303);
  const auto dataset = generate_dataset(4, 1, 20, 304);
  const auto stats = calibrate(model, dataset);
  const auto q = build_quantized_model(model, stats);
  const auto x_q = quantize_inputs(q, dataset[0]);
  const auto run1 = integer_sequence_run(q, x_q, IntLstmState::zero(q));
  const auto run2 = integer_sequence_run(q, x_q, IntLstmState::zero(q));
  REQUIRE(run1.size() == run2.size());
  for (size_t t = 0; t < run1.size(); ++t) {
    REQUIRE(run1[t].h_q == run2[t].h_q);
    REQUIRE(run1[t].c_q == run2[t].c_q);
  }
}

TEST_CASE("integer path stays near the float oracle on every variant") {
  for (int mask = 0; mask < 16; ++mask) {
    const LstmVariant variant{(mask & 1) != 0, (mask & 2) != 0,
                              (mask & 4) != 0, (mask & 8) != 0};
    const auto model = generate_model(variant, 8, 16, 8, 400 + mask);
    const auto dataset = generate_dataset(8, 2, 30, 500 + mask);
    const auto stats = calibrate(model, dataset);
    const auto q = build_quantized_model(model, stats);
    const auto report = run_compare(model, q, dataset);
    CHECK(report.frac_within_3 >= 0.99);
    CHECK(report.frac_within_16 == 1.0);
  }
}
