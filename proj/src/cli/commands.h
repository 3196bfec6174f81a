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

#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "cli/run_config.h"
#include "data/corpus.h"
#include "data/vocab.h"
#include "decode/search.h"
#include "model/params.h"

namespace hnmt {

// Trains on the configured corpus and writes the checkpoint (with vocab).
// Metric records go to `metrics` as JSON lines. Returns a summary JSON object.
std::string run_train(const RunConfig& config, std::ostream& metrics);

// Simulator report JSON for one strategy, using the config's cost model.
std::string run_simulate(const RunConfig& config, Strategy strategy);

// `targets_json` is {"targets": {"<strategy>": factor, ...}, "free": [...]};
// "free" is optional. The base config supplies the starting cost model.
std::string run_calibrate(const std::string& targets_json, const RunConfig& base);

struct DecodeRequest {
  std::size_t beam_size = 5;
  double length_penalty = 1.0;
  std::size_t max_len = 0;  // 0 allows 2 * source length + 10
};

// A checkpoint and its vocabulary, loaded once for many sentences.
class Translator {
 public:
  explicit Translator(const std::string& checkpoint);
  std::string translate(const std::string& line, const DecodeRequest& request) const;

 private:
  ModelParams<float> params_;
  Vocab vocab_;
};

// One output line per input line.
std::vector<std::string> run_decode(const std::string& checkpoint, const std::vector<std::string>& inputs,
                                    const DecodeRequest& request);

// Corpus BLEU, 0..100.
double run_eval_bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);

struct GradCheckSummary {
  double max_rel_err = 0.0;
  std::string worst_parameter;
};

// Central finite differences on a random batch, 64-bit, dropout off.
GradCheckSummary run_grad_check(const RunConfig& config);

// Table-style TSV with a header row: strategy, src_tokens_per_sec,
// scaling_factor, batch_size. Serial on one worker is always measured and
// is the baseline.
std::string run_bench(const RunConfig& config, const std::vector<Strategy>& strategies);

void run_gen_toy(ToyTask task, std::size_t n_sentences, std::size_t max_len, std::size_t vocab_size,
                 std::uint64_t seed, const std::string& src_path, const std::string& tgt_path);

std::vector<Strategy> parse_strategy_list(const std::string& list);

}  // namespace hnmt
