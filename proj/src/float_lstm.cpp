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
#include "qlstm/float_lstm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qlstm {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void check_size(const std::vector<double>& t, size_t expected,
                const std::string& name) {
  if (t.size() != expected) {
    throw std::invalid_argument("tensor " + name + " has size " +
                                std::to_string(t.size()) + ", expected " +
                                std::to_string(expected));
  }
  for (double v : t) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("tensor " + name + " contains a non-finite value");
    }
  }
}

void check_gate(const FloatGateWeights& gate, const FloatLstmModel& model,
                bool has_peephole, const std::string& name) {
  const auto cell = static_cast<size_t>(model.cell_dim);
  check_size(gate.w_input, cell * model.input_dim, name + ".w_input");
  check_size(gate.w_recurrent, cell * model.output_dim, name + ".w_recurrent");
  check_size(gate.peephole, has_peephole ? cell : 0, name + ".peephole");
  check_size(gate.bias, cell, name + ".bias");
  check_size(gate.ln_coeff, model.variant.layer_norm ? cell : 0,
             name + ".ln_coeff");
}

// W x + R h (+ P (.) c), the shared linear part of a gate.
void gate_linear(const FloatLstmModel& model, const FloatGateWeights& gate,
                 std::span<const double> x, std::span<const double> h,
                 const std::vector<double>* peephole_c,
                 std::vector<double>& out) {
  const int cell = model.cell_dim;
  out.assign(cell, 0.0);
  for (int r = 0; r < cell; ++r) {
    double acc = 0.0;
    const double* w_row = gate.w_input.data() + size_t(r) * model.input_dim;
    for (int j = 0; j < model.input_dim; ++j) acc += w_row[j] * x[j];
    const double* r_row =
        gate.w_recurrent.data() + size_t(r) * model.output_dim;
    for (int j = 0; j < model.output_dim; ++j) acc += r_row[j] * h[j];
    out[r] = acc;
  }
  if (peephole_c != nullptr && !gate.peephole.empty()) {
    for (int r = 0; r < cell; ++r) out[r] += gate.peephole[r] * (*peephole_c)[r];
  }
}

// Gate nonlinearity input: layer norm (+ bias after) when enabled, otherwise
// the bias joins the linear sum directly.
std::vector<double> gate_pre_activation(const FloatLstmModel& model,
                                        const FloatGateWeights& gate,
                                        const std::vector<double>& linear) {
  if (model.variant.layer_norm) {
    return float_layer_norm(linear, gate.ln_coeff, gate.bias);
  }
  std::vector<double> pre = linear;
  for (int r = 0; r < model.cell_dim; ++r) pre[r] += gate.bias[r];
  return pre;
}

}  // namespace

void FloatLstmModel::validate() const {
  if (input_dim <= 0 || cell_dim <= 0 || output_dim <= 0) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (!variant.projection && output_dim != cell_dim) {
    throw std::invalid_argument("output_dim must equal cell_dim without projection");
  }
  if (variant.cifg) {
    if (!input_gate.w_input.empty() || !input_gate.w_recurrent.empty() ||
        !input_gate.bias.empty() || !input_gate.peephole.empty() ||
        !input_gate.ln_coeff.empty()) {
      throw std::invalid_argument("CIFG models must not carry input-gate tensors");
    }
  } else {
    check_gate(input_gate, *this, variant.peephole, "input_gate");
  }
  check_gate(forget_gate, *this, variant.peephole, "forget_gate");
  check_gate(update_gate, *this, false, "update_gate");
  check_gate(output_gate, *this, variant.peephole, "output_gate");
  const auto out = static_cast<size_t>(output_dim);
  check_size(projection_weights, variant.projection ? out * cell_dim : 0,
             "projection_weights");
  check_size(projection_bias, variant.projection ? out : 0, "projection_bias");
}

std::vector<double> float_layer_norm(std::span<const double> x,
                                     std::span<const double> coeff,
                                     std::span<const double> bias) {
  const size_t n = x.size();
  if (n == 0 || coeff.size() != n || bias.size() != n) {
    throw std::invalid_argument("float_layer_norm: length mismatch");
  }
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double variance = 0.0;
  for (double v : x) variance += (v - mean) * (v - mean);
  variance /= static_cast<double>(n);
  const double stddev = std::sqrt(variance);

  std::vector<double> y(n);
  for (size_t i = 0; i < n; ++i) {
    const double normalized = stddev == 0.0 ? 0.0 : (x[i] - mean) / stddev;
    y[i] = normalized * coeff[i] + bias[i];
  }
  return y;
}

void float_cell_step(const FloatLstmModel& model, std::span<const double> x,
                     FloatLstmState& state, FloatStepTrace* trace) {
  if (static_cast<int>(x.size()) != model.input_dim) {
    throw std::invalid_argument("input vector has wrong dimension");
  }
  if (static_cast<int>(state.h.size()) != model.output_dim ||
      static_cast<int>(state.c.size()) != model.cell_dim) {
    throw std::invalid_argument("state has wrong dimensions");
  }
  const int cell = model.cell_dim;
  const bool peephole = model.variant.peephole;

  std::vector<double> linear;
  std::vector<double> forget(cell), input(cell), update(cell);

  gate_linear(model, model.forget_gate, x, state.h,
              peephole ? &state.c : nullptr, linear);
  if (trace) trace->gate_linear_forget = linear;
  {
    const auto pre = gate_pre_activation(model, model.forget_gate, linear);
    for (int r = 0; r < cell; ++r) forget[r] = sigmoid(pre[r]);
  }

  if (model.variant.cifg) {
    for (int r = 0; r < cell; ++r) input[r] = 1.0 - forget[r];
  } else {
    gate_linear(model, model.input_gate, x, state.h,
                peephole ? &state.c : nullptr, linear);
    if (trace) trace->gate_linear_input = linear;
    const auto pre = gate_pre_activation(model, model.input_gate, linear);
    for (int r = 0; r < cell; ++r) input[r] = sigmoid(pre[r]);
  }

  gate_linear(model, model.update_gate, x, state.h, nullptr, linear);
  if (trace) trace->gate_linear_update = linear;
  {
    const auto pre = gate_pre_activation(model, model.update_gate, linear);
    for (int r = 0; r < cell; ++r) update[r] = std::tanh(pre[r]);
  }

  for (int r = 0; r < cell; ++r) {
    state.c[r] = input[r] * update[r] + forget[r] * state.c[r];
  }

  // Output gate peephole reads the freshly updated cell state.
  gate_linear(model, model.output_gate, x, state.h,
              peephole ? &state.c : nullptr, linear);
  if (trace) trace->gate_linear_output = linear;
  std::vector<double> hidden(cell);
  {
    const auto pre = gate_pre_activation(model, model.output_gate, linear);
    for (int r = 0; r < cell; ++r) {
      hidden[r] = sigmoid(pre[r]) * std::tanh(state.c[r]);
    }
  }
  if (trace) trace->hidden_pre_projection = hidden;

  if (model.variant.projection) {
    for (int r = 0; r < model.output_dim; ++r) {
      double acc = model.projection_bias[r];
      const double* row = model.projection_weights.data() + size_t(r) * cell;
      for (int j = 0; j < cell; ++j) acc += row[j] * hidden[j];
      state.h[r] = acc;
    }
  } else {
    state.h = std::move(hidden);
  }
}

std::vector<FloatLstmState> float_sequence_run(
    const FloatLstmModel& model,
    const std::vector<std::vector<double>>& inputs,
    const FloatLstmState& initial_state) {
  std::vector<FloatLstmState> states;
  states.reserve(inputs.size());
  FloatLstmState state = initial_state;
  for (const auto& x : inputs) {
    float_cell_step(model, x, state);
    states.push_back(state);
  }
  return states;
}

}  // namespace qlstm
