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

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "data/corpus.h"
#include "model/params.h"
#include "parallel/placement.h"
#include "tensor/rng.h"
#include "train/optimizer.h"

namespace hnmt {

// exp(token-summed NLL / predicted tokens) with dropout off. Throws
// ValueError on an empty corpus.
template <typename T>
double perplexity(const ModelParams<T>& params, const ParallelCorpus& corpus, std::size_t batch_size = 64);

// One epoch of mini-batches: sentences grouped by source length in buckets
// of 4 tokens, shuffled within buckets, cut into batches of batch_size, and
// the batches shuffled. A trailing batch smaller than min_batch joins the one
// before it.
std::vector<Batch> make_batches(const ParallelCorpus& corpus, std::size_t batch_size, Rng& rng,
                                std::size_t min_batch = 1);

struct TrainOptions {
  Strategy strategy = Strategy::kSerial;
  int n_devices = 1;
  std::size_t batch_size = 32;
  int epochs = 10;
  AdamConfig adam;
  double lr_decay = 0.7;
  std::int64_t eval_interval = 50;  // batches
  double clip_norm = 0.0;           // 0 disables clipping
  std::uint64_t seed = 1;           // initialization, shuffling and dropout
  double init_range = 0.1;
  // Stop at the first evaluation whose dev perplexity is at or below this;
  // 0 never stops early.
  double target_dev_ppl = 0.0;
  // Serial single-device throughput for the scaling-factor column. When 0,
  // a serial single-device run uses its own throughput and other runs report
  // no scaling factor.
  double baseline_tokens_per_sec = 0.0;
  std::chrono::milliseconds device_timeout{120000};
  // JSON-lines metrics sink.
  std::ostream* metrics = nullptr;
  // Test hook: may replace each measured dev perplexity before the decay rule
  // sees it.
  std::function<double(std::int64_t batches, double ppl)> dev_ppl_hook;
};

struct MetricRecord {
  int epoch = 0;
  std::int64_t batches = 0;
  double loss = 0.0;     // token-mean training loss since the previous record
  double dev_ppl = 0.0;  // NaN without a dev set
  double lr = 0.0;       // rate after the decay rule
  bool lr_decayed = false;
  // Wall-clock dependent; excluded from determinism comparisons.
  double src_tokens_per_sec = 0.0;
  double scaling_factor = 0.0;  // NaN when unknown

  // One JSON object, numbers fixed to 4 decimals, NaN as null.
  std::string to_json() const;
};

template <typename T>
struct TrainResult {
  ModelParams<T> params;
  TrainState state;
  double lr = 0.0;
  std::vector<MetricRecord> records;
  std::vector<double> step_losses;
};

// Runs epochs of run_strategy + adam_step from a seeded initialization. The
// parameters use the plan's model variant (see build_placement). Throws
// NumericError when the loss becomes non-finite.
template <typename T>
TrainResult<T> train(const ModelConfig& config, const TrainOptions& options, const ParallelCorpus& train_set,
                     const ParallelCorpus& dev_set);

}  // namespace hnmt
