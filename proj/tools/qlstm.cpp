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
//
// qlstm: integer-only LSTM inference toolkit.
//
//   gen        generate a reproducible random float model (and dataset)
//   calibrate  collect per-tensor min/max statistics over a dataset
//   quantize   build the integer model from a float model plus statistics
//   run        execute a model (float or integer engine) over sequences
//   compare    run both engines and report the dequantized-output error
//   bench      report steps/second for one or more models
//
// Exit codes: 0 success, 1 usage error, 2 data/model error.

#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qlstm/model_io.hpp"
#include "qlstm/toolkit.hpp"

namespace {

using namespace qlstm;

LstmVariant parse_variant(const std::string& spec) {
  LstmVariant v;
  std::stringstream ss(spec);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token == "ln" || token == "layer_norm") {
      v.layer_norm = true;
    } else if (token == "proj" || token == "projection") {
      v.projection = true;
    } else if (token == "peephole" || token == "ph") {
      v.peephole = true;
    } else if (token == "cifg") {
      v.cifg = true;
    } else if (token != "none" && !token.empty()) {
      throw CLI::ValidationError("--variant",
                                 "unknown variant flag '" + token + "'");
    }
  }
  return v;
}

void parse_dims(const std::string& spec, int& in, int& cell, int& out) {
  if (std::sscanf(spec.c_str(), "%d,%d,%d", &in, &cell, &out) != 3 ||
      in <= 0 || cell <= 0 || out <= 0) {
    throw CLI::ValidationError("--dims", "expected I,C,O with positive values");
  }
}

RunOutput run_float_engine(const FloatLstmModel& model, const Dataset& dataset,
                           bool dump_state) {
  RunOutput output;
  output.engine = "float";
  for (const auto& sequence : dataset) {
    const auto states =
        float_sequence_run(model, sequence, FloatLstmState::zero(model));
    std::vector<std::vector<double>> h, c;
    for (const auto& state : states) {
      h.push_back(state.h);
      if (dump_state) c.push_back(state.c);
    }
    output.h.push_back(std::move(h));
    if (dump_state) output.c.push_back(std::move(c));
  }
  return output;
}

RunOutput run_integer_engine(const QuantizedLstmModel& model,
                             const Dataset& dataset, bool dump_state) {
  RunOutput output;
  output.engine = "integer";
  for (const auto& sequence : dataset) {
    const auto x_q = quantize_inputs(model, sequence);
    const auto states =
        integer_sequence_run(model, x_q, IntLstmState::zero(model));
    std::vector<std::vector<double>> h, c;
    for (const auto& state : states) {
      std::vector<double> h_t(state.h_q.size());
      for (size_t i = 0; i < state.h_q.size(); ++i) {
        h_t[i] = model.h_params.dequantize(state.h_q[i]);
      }
      h.push_back(std::move(h_t));
      if (dump_state) {
        std::vector<double> c_t(state.c_q.size());
        for (size_t i = 0; i < state.c_q.size(); ++i) {
          c_t[i] = model.cell_format.from_raw(state.c_q[i]);
        }
        c.push_back(std::move(c_t));
      }
    }
    output.h.push_back(std::move(h));
    if (dump_state) output.c.push_back(std::move(c));
  }
  return output;
}

struct BenchResult {
  std::string path;
  std::string engine;
  int steps = 0;
  double steps_per_second = 0.0;
};

BenchResult bench_model(const std::string& path, int steps) {
  using clock = std::chrono::steady_clock;
  BenchResult result;
  result.path = path;
  result.steps = steps;
  const ModelKind kind = peek_model_kind(path);
  if (kind == ModelKind::kFloat) {
    result.engine = "float";
    if (steps > 0) {
      const auto model = load_float_model(path);
      const auto dataset = generate_dataset(model.input_dim, 1, steps, 1234);
      const auto t0 = clock::now();
      float_sequence_run(model, dataset[0], FloatLstmState::zero(model));
      const double seconds =
          std::chrono::duration<double>(clock::now() - t0).count();
      if (seconds > 0) result.steps_per_second = steps / seconds;
    }
  } else {
    result.engine = "integer";
    if (steps > 0) {
      const auto model = load_quantized_model(path);
      const auto dataset = generate_dataset(model.input_dim, 1, steps, 1234);
      const auto x_q = quantize_inputs(model, dataset[0]);
      const auto t0 = clock::now();
      integer_sequence_run(model, x_q, IntLstmState::zero(model));
      const double seconds =
          std::chrono::duration<double>(clock::now() - t0).count();
      if (seconds > 0) result.steps_per_second = steps / seconds;
    }
  }
  return result;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"integer-only LSTM inference and quantization toolkit"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a random float model");
  std::string gen_variant = "none", gen_dims = "16,32,16", gen_out;
  std::string gen_data_out;
  uint64_t gen_seed = 0;
  int gen_seq_len = 20, gen_num_seq = 4;
  gen->add_option("--variant", gen_variant,
                  "comma list of: ln, proj, peephole, cifg (or 'none')");
  gen->add_option("--dims", gen_dims, "dimensions I,C,O (O forced to C without proj)");
  gen->add_option("--seed", gen_seed, "RNG seed");
  gen->add_option("--out", gen_out, "output model path")->required();
  gen->add_option("--data-out", gen_data_out, "also write a dataset here");
  gen->add_option("--seq-len", gen_seq_len, "dataset sequence length");
  gen->add_option("--num-seq", gen_num_seq, "dataset sequence count");

  // calibrate
  auto* calibrate_cmd =
      app.add_subcommand("calibrate", "collect min/max statistics");
  std::string cal_model, cal_data, cal_out;
  calibrate_cmd->add_option("--model", cal_model, "float model path")->required();
  calibrate_cmd->add_option("--data", cal_data, "sequence file path")->required();
  calibrate_cmd->add_option("--out", cal_out, "output stats path")->required();

  // quantize
  auto* quantize_cmd =
      app.add_subcommand("quantize", "build the integer model");
  std::string qz_model, qz_stats, qz_out;
  quantize_cmd->add_option("--model", qz_model, "float model path")->required();
  quantize_cmd->add_option("--stats", qz_stats, "stats file path")->required();
  quantize_cmd->add_option("--out", qz_out, "output model path")->required();

  // run
  auto* run_cmd = app.add_subcommand("run", "execute a model over sequences");
  std::string run_model, run_input, run_out;
  bool run_dump_state = false;
  run_cmd->add_option("--model", run_model, "model path (float or quantized)")
      ->required();
  run_cmd->add_option("--input", run_input, "sequence file path")->required();
  run_cmd->add_option("--out", run_out, "output path")->required();
  run_cmd->add_flag("--dump-state", run_dump_state, "also emit cell state");

  // compare
  auto* compare_cmd =
      app.add_subcommand("compare", "run both engines and report the error");
  std::string cmp_float, cmp_quant, cmp_data, cmp_report;
  compare_cmd->add_option("--float", cmp_float, "float model path")->required();
  compare_cmd->add_option("--quant", cmp_quant, "quantized model path")
      ->required();
  compare_cmd->add_option("--data", cmp_data, "sequence file path")->required();
  compare_cmd->add_option("--report", cmp_report, "report output path")
      ->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "report steps/second");
  std::vector<std::string> bench_models;
  std::string bench_out;
  int bench_steps = 10000;
  bench_cmd->add_option("--model", bench_models, "model path (repeatable)")
      ->required();
  bench_cmd->add_option("--steps", bench_steps, "number of timesteps");
  bench_cmd->add_option("--out", bench_out, "optional JSON report path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const LstmVariant variant = parse_variant(gen_variant);
      int in = 0, cell = 0, out = 0;
      parse_dims(gen_dims, in, cell, out);
      const auto model = generate_model(variant, in, cell, out, gen_seed);
      save_float_model(model, gen_out);
      std::printf("wrote %s (dims %d,%d,%d)\n", gen_out.c_str(),
                  model.input_dim, model.cell_dim, model.output_dim);
      if (!gen_data_out.empty()) {
        save_sequences(generate_dataset(in, gen_num_seq, gen_seq_len, gen_seed),
                       gen_data_out);
        std::printf("wrote %s (%d sequences x %d steps)\n",
                    gen_data_out.c_str(), gen_num_seq, gen_seq_len);
      }
    } else if (*calibrate_cmd) {
      const auto model = load_float_model(cal_model);
      const auto dataset = load_sequences(cal_data);
      const auto stats = calibrate(model, dataset);
      save_stats(stats, model.variant, cal_out);
      std::printf("wrote %s\n", cal_out.c_str());
    } else if (*quantize_cmd) {
      const auto model = load_float_model(qz_model);
      LstmVariant stats_variant;
      const auto stats = load_stats(qz_stats, &stats_variant);
      if (!(stats_variant == model.variant)) {
        throw std::runtime_error("stats file was collected for a different variant");
      }
      save_quantized_model(build_quantized_model(model, stats), qz_out);
      std::printf("wrote %s\n", qz_out.c_str());
    } else if (*run_cmd) {
      const auto dataset = load_sequences(run_input);
      const RunOutput output =
          peek_model_kind(run_model) == ModelKind::kFloat
              ? run_float_engine(load_float_model(run_model), dataset,
                                 run_dump_state)
              : run_integer_engine(load_quantized_model(run_model), dataset,
                                   run_dump_state);
      save_run_output(output, run_out);
      std::printf("wrote %s (%s engine)\n", run_out.c_str(),
                  output.engine.c_str());
    } else if (*compare_cmd) {
      const auto float_model = load_float_model(cmp_float);
      const auto quantized_model = load_quantized_model(cmp_quant);
      const auto dataset = load_sequences(cmp_data);
      const auto report = run_compare(float_model, quantized_model, dataset);
      save_report(report, cmp_report);
      std::printf("max |error| %.2f steps; within 1/3/16 steps: %.4f/%.4f/%.4f\n",
                  report.max_abs_error_steps, report.frac_within_1,
                  report.frac_within_3, report.frac_within_16);
      std::printf("float %.0f steps/s, integer %.0f steps/s\n",
                  report.float_steps_per_second,
                  report.integer_steps_per_second);
    } else if (*bench_cmd) {
      nlohmann::json results = nlohmann::json::array();
      for (const auto& path : bench_models) {
        const BenchResult r = bench_model(path, bench_steps);
        if (r.steps > 0) {
          std::printf("%s engine: %.0f steps/s (%d steps, %s)\n",
                      r.engine.c_str(), r.steps_per_second, r.steps,
                      r.path.c_str());
          results.push_back({{"model", r.path},
                             {"engine", r.engine},
                             {"steps", r.steps},
                             {"steps_per_second", r.steps_per_second}});
        }
      }
      if (bench_steps <= 0) std::printf("empty report (0 steps)\n");
      if (!bench_out.empty()) {
        nlohmann::json j{{"format_version", kFormatVersion},
                         {"kind", "bench"},
                         {"results", results}};
        std::ofstream out(bench_out);
        if (!out) throw std::runtime_error("cannot write '" + bench_out + "'");
        out << j.dump(1) << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
