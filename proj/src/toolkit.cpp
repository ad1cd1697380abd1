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
#include "qlstm/toolkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace qlstm {
namespace {

// Deterministic across platforms: mt19937's sequence is pinned by the
// standard, the [0, 1) mapping is explicit instead of
// std::uniform_real_distribution (whose output is implementation-defined).
class UniformSource {
 public:
  explicit UniformSource(uint64_t seed)
      : engine_(static_cast<uint32_t>(seed ^ (seed >> 32))) {}

  double uniform(double lo, double hi) {
    const double u = engine_() * 0x1p-32;
    return lo + u * (hi - lo);
  }

  std::vector<double> vector(size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& value : v) value = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937 engine_;
};

FloatGateWeights generate_gate(UniformSource& rng, int cell, int in, int out,
                               bool peephole, bool layer_norm) {
  FloatGateWeights g;
  g.w_input = rng.vector(size_t(cell) * in, -0.5, 0.5);
  g.w_recurrent = rng.vector(size_t(cell) * out, -0.5, 0.5);
  if (peephole) g.peephole = rng.vector(cell, -0.5, 0.5);
  g.bias = rng.vector(cell, -1.0, 1.0);
  if (layer_norm) g.ln_coeff = rng.vector(cell, 0.5, 1.5);
  return g;
}

}  // namespace

FloatLstmModel generate_model(LstmVariant variant, int input_dim, int cell_dim,
                              int output_dim, uint64_t seed) {
  if (input_dim <= 0 || cell_dim <= 0 || output_dim <= 0) {
    throw std::invalid_argument("generate_model: dimensions must be positive");
  }
  if (!variant.projection) output_dim = cell_dim;
  UniformSource rng(seed);
  FloatLstmModel model;
  model.variant = variant;
  model.input_dim = input_dim;
  model.cell_dim = cell_dim;
  model.output_dim = output_dim;
  if (!variant.cifg) {
    model.input_gate = generate_gate(rng, cell_dim, input_dim, output_dim,
                                     variant.peephole, variant.layer_norm);
  }
  model.forget_gate = generate_gate(rng, cell_dim, input_dim, output_dim,
                                    variant.peephole, variant.layer_norm);
  model.update_gate = generate_gate(rng, cell_dim, input_dim, output_dim,
                                    false, variant.layer_norm);
  model.output_gate = generate_gate(rng, cell_dim, input_dim, output_dim,
                                    variant.peephole, variant.layer_norm);
  if (variant.projection) {
    model.projection_weights =
        rng.vector(size_t(output_dim) * cell_dim, -0.5, 0.5);
    model.projection_bias = rng.vector(output_dim, -1.0, 1.0);
  }
  model.validate();
  return model;
}

Dataset generate_dataset(int input_dim, int num_sequences, int seq_len,
                         uint64_t seed) {
  if (input_dim <= 0 || num_sequences < 0 || seq_len < 0) {
    throw std::invalid_argument("generate_dataset: invalid dimensions");
  }
  UniformSource rng(seed * 0x9e3779b97f4a7c15ull + 1);
  Dataset dataset(num_sequences);
  for (auto& sequence : dataset) {
    sequence.resize(seq_len);
    for (auto& x : sequence) x = rng.vector(input_dim, -1.0, 1.0);
  }
  return dataset;
}

std::vector<std::vector<int8_t>> quantize_inputs(
    const QuantizedLstmModel& model,
    const std::vector<std::vector<double>>& sequence) {
  std::vector<std::vector<int8_t>> out(sequence.size());
  for (size_t t = 0; t < sequence.size(); ++t) {
    if (static_cast<int>(sequence[t].size()) != model.input_dim) {
      throw std::runtime_error("input dimension does not match the model");
    }
    out[t].resize(sequence[t].size());
    for (size_t i = 0; i < sequence[t].size(); ++i) {
      out[t][i] = model.x_params.quantize(sequence[t][i]);
    }
  }
  return out;
}

CompareReport run_compare(const FloatLstmModel& float_model,
                          const QuantizedLstmModel& quantized_model,
                          const Dataset& dataset) {
  if (float_model.input_dim != quantized_model.input_dim ||
      float_model.cell_dim != quantized_model.cell_dim ||
      float_model.output_dim != quantized_model.output_dim ||
      !(float_model.variant == quantized_model.variant)) {
    throw std::runtime_error("compare: models have mismatched dimensions or variants");
  }
  using clock = std::chrono::steady_clock;
  CompareReport report;
  const double s_h = quantized_model.h_params.scale;
  const int zp_h = quantized_model.h_params.zero_point;

  int64_t total = 0, within_1 = 0, within_3 = 0, within_16 = 0;
  int64_t steps = 0;
  double float_seconds = 0.0, integer_seconds = 0.0;

  for (const auto& sequence : dataset) {
    const auto t0 = clock::now();
    const auto float_states = float_sequence_run(
        float_model, sequence, FloatLstmState::zero(float_model));
    const auto t1 = clock::now();
    const auto x_q = quantize_inputs(quantized_model, sequence);
    const auto t2 = clock::now();
    const auto int_states = integer_sequence_run(
        quantized_model, x_q, IntLstmState::zero(quantized_model));
    const auto t3 = clock::now();
    float_seconds += std::chrono::duration<double>(t1 - t0).count();
    integer_seconds += std::chrono::duration<double>(t3 - t2).count();
    steps += static_cast<int64_t>(sequence.size());

    SequenceComparison cmp;
    int64_t seq_total = 0, seq_1 = 0, seq_3 = 0, seq_16 = 0;
    for (size_t t = 0; t < sequence.size(); ++t) {
      double step_max = 0.0;
      int step_within_3 = 0, step_within_16 = 0;
      const auto& h_float = float_states[t].h;
      const auto& h_q = int_states[t].h_q;
      for (size_t i = 0; i < h_float.size(); ++i) {
        const double h_int = s_h * (int{h_q[i]} - zp_h);
        const double err_steps = std::abs(h_int - h_float[i]) / s_h;
        step_max = std::max(step_max, err_steps);
        ++total;
        ++seq_total;
        if (err_steps <= 1.0) {
          ++within_1;
          ++seq_1;
        }
        if (err_steps <= 3.0) {
          ++within_3;
          ++seq_3;
          ++step_within_3;
        }
        if (err_steps <= 16.0) {
          ++within_16;
          ++seq_16;
          ++step_within_16;
        }
      }
      cmp.per_step_max_error_steps.push_back(step_max);
      cmp.per_step_within_3.push_back(step_within_3);
      cmp.per_step_within_16.push_back(step_within_16);
      cmp.per_step_elements.push_back(static_cast<int>(h_float.size()));
      cmp.max_abs_error_steps = std::max(cmp.max_abs_error_steps, step_max);
    }
    if (seq_total > 0) {
      cmp.frac_within_1 = static_cast<double>(seq_1) / seq_total;
      cmp.frac_within_3 = static_cast<double>(seq_3) / seq_total;
      cmp.frac_within_16 = static_cast<double>(seq_16) / seq_total;
    }
    report.sequences.push_back(std::move(cmp));
  }

  for (const auto& cmp : report.sequences) {
    report.max_abs_error_steps =
        std::max(report.max_abs_error_steps, cmp.max_abs_error_steps);
  }
  if (total > 0) {
    report.frac_within_1 = static_cast<double>(within_1) / total;
    report.frac_within_3 = static_cast<double>(within_3) / total;
    report.frac_within_16 = static_cast<double>(within_16) / total;
  }
  if (float_seconds > 0.0) {
    report.float_steps_per_second = static_cast<double>(steps) / float_seconds;
  }
  if (integer_seconds > 0.0) {
    report.integer_steps_per_second =
        static_cast<double>(steps) / integer_seconds;
  }
  return report;
}

void save_report(const CompareReport& report, const std::string& path) {
  nlohmann::json j;
  j["format_version"] = kFormatVersion;
  j["kind"] = "report";
  j["aggregate"] = {{"max_abs_error_steps", report.max_abs_error_steps},
                    {"frac_within_1", report.frac_within_1},
                    {"frac_within_3", report.frac_within_3},
                    {"frac_within_16", report.frac_within_16}};
  j["runtime"] = {{"float_steps_per_second", report.float_steps_per_second},
                  {"integer_steps_per_second", report.integer_steps_per_second}};
  nlohmann::json sequences = nlohmann::json::array();
  for (const auto& cmp : report.sequences) {
    sequences.push_back(
        {{"max_abs_error_steps", cmp.max_abs_error_steps},
         {"frac_within_3", cmp.frac_within_3},
         {"frac_within_16", cmp.frac_within_16},
         {"per_step_max_error_steps", cmp.per_step_max_error_steps}});
  }
  j["sequences"] = sequences;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << j.dump(1) << '\n';
}

}  // namespace qlstm
