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

#include <string>
#include <vector>

#include "model/config.h"

namespace hnmt {

enum class Strategy { kSerial, kDataParallel, kModelParallel, kHybrid, kHybridIF };

std::string to_string(Strategy s);
// Accepts serial, data-parallel (dp), model-parallel (mp), hybrid, hybrid-if.
Strategy parse_strategy(const std::string& s);

struct PlacementPlan {
  Strategy strategy = Strategy::kSerial;
  int n_devices = 1;
  // Model variant the strategy runs. Hybrid always drops input feeding and
  // HybridIF always keeps it; the others follow the model config.
  FeedVariant variant = FeedVariant::kNoInputFeeding;
  // Device of each LSTM layer, index 1..L; index 0 is the embeddings, which
  // always sit with layer 1. All zeros for replicated strategies.
  std::vector<int> layer_device;
  // Device storing the top-layer states S and H.
  int state_owner = 0;
  // Devices running the attention-softmax part.
  std::vector<int> attn_devices;
  int root = 0;

  bool replicated() const {
    return strategy == Strategy::kSerial || strategy == Strategy::kDataParallel;
  }
  // Devices allowed to read or write the named parameter.
  std::vector<int> owners(const std::string& param) const;
};

// `layer_devices`, when non-empty, overrides the layer split of the
// model-parallel strategies; it holds one device per layer 1..L.
// Throws ConfigError for unsupported (strategy, n_devices) combinations.
PlacementPlan build_placement(Strategy strategy, int n_devices, const ModelConfig& config,
                              const std::vector<int>& layer_devices = {});

}  // namespace hnmt
