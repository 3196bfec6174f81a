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

#include <cstdint>
#include <string>
#include <vector>

#include "model/config.h"
#include "parallel/placement.h"
#include "sim/simulator.h"

namespace hnmt {

// Everything a CLI run needs, read from a flat `key = value` file.
struct RunConfig {
  ModelConfig model;

  Strategy strategy = Strategy::kSerial;
  int n_devices = 1;
  int batch_size = 32;
  int epochs = 10;
  double lr = 0.001;
  double lr_decay = 0.7;
  std::int64_t lr_decay_interval = 50;  // batches between dev evaluations
  double clip_norm = 0.0;
  std::uint64_t seed = 1;
  double init_range = 0.1;
  double target_dev_ppl = 0.0;
  double baseline_tokens_per_sec = 0.0;
  int device_timeout_ms = 120000;

  std::string train_src, train_tgt, dev_src, dev_tgt;
  std::string vocab;       // loaded when it exists, otherwise built and written
  std::string checkpoint;  // written by train
  std::string metrics;     // JSON-lines file; empty prints to stdout

  CostModel cost;
  int sim_src_len = 30;
  int sim_tgt_len = 30;
  int sim_batch_size = 0;              // 0 runs at the strategy's cap
  std::vector<int> sim_layer_devices;  // empty keeps the default split

  int bench_sentence_len = 20;
  int bench_steps = 3;

  int grad_check_batch = 3;
  double grad_check_eps = 1e-5;
  double grad_check_init_range = 1.0;

  // Blank lines and `#` comments are ignored. Throws ConfigError on unknown
  // keys, malformed lines or values, and on an invalid whole.
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);
  // Every key, one per line; parse(serialize()) == *this.
  std::string serialize() const;
  // Throws ConfigError on an unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);
  static const std::vector<std::string>& keys();
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

// HNMT_CONFIG, when set and non-empty, replaces the given config path.
std::string resolve_config_path(const std::string& path);

}  // namespace hnmt
