// Copyright 2026 The HybridNMT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "hnmt/hnmt.h"

namespace {

constexpr double kGradCheckTolerance = 1e-4;

int fail(hnmt_status status) {
  std::cerr << "error: " << hnmt_last_error() << "\n";
  return status == HNMT_ERR_CONFIG ? 2 : 1;
}

// Owns a string returned by the library.
struct Owned {
  char* s = nullptr;
  ~Owned() { hnmt_string_free(s); }
};

struct Config {
  hnmt_config* handle = nullptr;
  ~Config() { hnmt_config_free(handle); }
};

// Loads the config file named by HNMT_CONFIG or `path`; defaults when both
// are empty.
hnmt_status load_config(const std::string& path, Config& config) {
  Owned resolved;
  if (hnmt_status st = hnmt_resolve_config_path(path.c_str(), &resolved.s); st != HNMT_OK) return st;
  if (*resolved.s == '\0') return hnmt_config_new(&config.handle);
  return hnmt_config_load(resolved.s, &config.handle);
}

void print_line(const char* line, void*) {
  std::cout << line << "\n" << std::flush;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid data-model parallel training and evaluation for attention Seq2Seq models"};
  app.require_subcommand(1);

  std::string config_path;
  std::string strategy = "serial";
  std::string strategies = "serial,data-parallel,model-parallel,hybrid-if,hybrid";
  std::string targets_path;
  std::string checkpoint, input_path, output_path;
  std::size_t beam = 5, max_len = 0;
  double length_penalty = 1.0;
  std::string hyp_path, ref_path;
  std::string task = "reverse", src_path, tgt_path;
  std::size_t n_sentences = 2000, toy_max_len = 10, vocab_size = 50;
  std::uint64_t seed = 1;

  auto* train = app.add_subcommand("train", "Train a model and write its checkpoint");
  train->add_option("--config", config_path, "Config file");

  auto* simulate = app.add_subcommand("simulate", "Simulate one mini-batch and print the report JSON");
  simulate->add_option("--config", config_path, "Config file");
  simulate->add_option("--strategy", strategy, "serial, data-parallel, model-parallel, hybrid or hybrid-if");

  auto* calibrate = app.add_subcommand("calibrate", "Fit the simulator cost model to target scaling factors");
  calibrate->add_option("--targets", targets_path, "JSON file with targets and free parameters")->required();
  calibrate->add_option("--config", config_path, "Config file with the starting cost model");

  auto* decode = app.add_subcommand("decode", "Translate one sentence per line with beam search");
  decode->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  decode->add_option("--input", input_path, "Source sentences")->required();
  decode->add_option("--output", output_path, "Output file; stdout when omitted");
  decode->add_option("--beam", beam, "Beam size")->check(CLI::PositiveNumber);
  decode->add_option("--length-penalty", length_penalty, "Length normalization exponent");
  decode->add_option("--max-len", max_len, "Maximum output tokens; 0 uses twice the source length plus 10");

  auto* bleu = app.add_subcommand("eval-bleu", "Corpus BLEU of hypotheses against references");
  bleu->add_option("--hyp", hyp_path, "Hypothesis file")->required();
  bleu->add_option("--ref", ref_path, "Reference file")->required();

  auto* grad = app.add_subcommand("grad-check", "Compare gradients with central finite differences");
  grad->add_option("--config", config_path, "Config file");

  auto* bench = app.add_subcommand("bench", "Measure training throughput per strategy");
  bench->add_option("--config", config_path, "Config file");
  bench->add_option("--strategies", strategies, "Comma-separated strategies");

  auto* gen = app.add_subcommand("gen-toy", "Write a synthetic copy or reverse corpus");
  gen->add_option("--task", task, "copy or reverse");
  gen->add_option("--n", n_sentences, "Number of sentences");
  gen->add_option("--max-len", toy_max_len, "Maximum sentence length");
  gen->add_option("--vocab-size", vocab_size, "Vocabulary size including the four reserved tokens");
  gen->add_option("--seed", seed, "Random seed");
  gen->add_option("--src", src_path, "Source output file")->required();
  gen->add_option("--tgt", tgt_path, "Target output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*train) {
    Config config;
    if (hnmt_status st = load_config(config_path, config); st != HNMT_OK) return fail(st);
    Owned summary;
    if (hnmt_status st = hnmt_train(config.handle, print_line, nullptr, &summary.s); st != HNMT_OK) return fail(st);
    std::cout << summary.s << "\n";
    return 0;
  }
  if (*simulate) {
    Config config;
    if (hnmt_status st = load_config(config_path, config); st != HNMT_OK) return fail(st);
    Owned report;
    if (hnmt_status st = hnmt_simulate(config.handle, strategy.c_str(), &report.s); st != HNMT_OK) return fail(st);
    std::cout << report.s << "\n";
    return 0;
  }
  if (*calibrate) {
    std::ifstream in(targets_path);
    if (!in) {
      std::cerr << "error: cannot read targets file '" << targets_path << "'\n";
      return 1;
    }
    const std::string targets((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    Config config;
    if (hnmt_status st = load_config(config_path, config); st != HNMT_OK) return fail(st);
    Owned result;
    if (hnmt_status st = hnmt_calibrate(config.handle, targets.c_str(), &result.s); st != HNMT_OK) return fail(st);
    std::cout << result.s << "\n";
    return 0;
  }
  if (*decode) {
    hnmt_model* model = nullptr;
    if (hnmt_status st = hnmt_model_load(checkpoint.c_str(), &model); st != HNMT_OK) return fail(st);
    std::unique_ptr<hnmt_model, void (*)(hnmt_model*)> guard(model, hnmt_model_free);
    std::ifstream in(input_path);
    if (!in) {
      std::cerr << "error: cannot read input file '" << input_path << "'\n";
      return 1;
    }
    std::ofstream file;
    if (!output_path.empty()) {
      file.open(output_path);
      if (!file) {
        std::cerr << "error: cannot write output file '" << output_path << "'\n";
        return 1;
      }
    }
    std::ostream& out = output_path.empty() ? std::cout : file;
    for (std::string line; std::getline(in, line);) {
      Owned translation;
      const hnmt_status st =
          hnmt_model_translate(model, line.c_str(), beam, length_penalty, max_len, &translation.s);
      if (st != HNMT_OK) return fail(st);
      out << translation.s << "\n";
    }
    return 0;
  }
  if (*bleu) {
    double score = 0.0;
    if (hnmt_status st = hnmt_eval_bleu(hyp_path.c_str(), ref_path.c_str(), &score); st != HNMT_OK) return fail(st);
    std::printf("%.4f\n", score);
    return 0;
  }
  if (*grad) {
    Config config;
    if (hnmt_status st = load_config(config_path, config); st != HNMT_OK) return fail(st);
    double err = 0.0;
    Owned worst;
    if (hnmt_status st = hnmt_grad_check(config.handle, &err, &worst.s); st != HNMT_OK) return fail(st);
    std::printf("max_rel_err\t%.4e\nworst_parameter\t%s\n", err, worst.s);
    if (!(err <= kGradCheckTolerance)) {
      std::fprintf(stderr, "error: max_rel_err %.4e exceeds %.4e\n", err, kGradCheckTolerance);
      return 1;
    }
    return 0;
  }
  if (*bench) {
    Config config;
    if (hnmt_status st = load_config(config_path, config); st != HNMT_OK) return fail(st);
    Owned tsv;
    if (hnmt_status st = hnmt_bench(config.handle, strategies.c_str(), &tsv.s); st != HNMT_OK) return fail(st);
    std::cout << tsv.s;
    return 0;
  }
  if (*gen) {
    if (hnmt_status st = hnmt_gen_toy(task.c_str(), n_sentences, toy_max_len, vocab_size, seed, src_path.c_str(),
                                      tgt_path.c_str());
        st != HNMT_OK)
      return fail(st);
    return 0;
  }
  return 0;
}
