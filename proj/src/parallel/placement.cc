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

#include "parallel/placement.h"

#include <numeric>

#include "common/errors.h"
#include "model/params.h"

namespace hnmt {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kSerial: return "serial";
    case Strategy::kDataParallel: return "data-parallel";
    case Strategy::kModelParallel: return "model-parallel";
    case Strategy::kHybrid: return "hybrid";
    case Strategy::kHybridIF: return "hybrid-if";
  }
  return "?";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "serial") return Strategy::kSerial;
  if (s == "data-parallel" || s == "dp") return Strategy::kDataParallel;
  if (s == "model-parallel" || s == "mp") return Strategy::kModelParallel;
  if (s == "hybrid") return Strategy::kHybrid;
  if (s == "hybrid-if") return Strategy::kHybridIF;
  throw ConfigError("unknown strategy '" + s +
                    "' (expected serial, data-parallel, model-parallel, hybrid or hybrid-if)");
}

std::vector<int> PlacementPlan::owners(const std::string& param) const {
  std::vector<int> all(n_devices);
  std::iota(all.begin(), all.end(), 0);
  if (strategy == Strategy::kDataParallel) return all;
  if (strategy == Strategy::kSerial) return {0};
  switch (part_of(param)) {
    case ModelPart::kEmbedding: return {layer_device[1]};
    case ModelPart::kAttentionSoftmax: return attn_devices;
    case ModelPart::kLstmStack: {
      // "encoder.<l>.<tensor>" or "decoder.<l>.<tensor>"
      const auto dot = param.find('.');
      const int layer = std::stoi(param.substr(dot + 1));
      return {layer_device.at(layer)};
    }
  }
  return {};
}

PlacementPlan build_placement(Strategy strategy, int n_devices, const ModelConfig& config,
                              const std::vector<int>& layer_devices) {
  config.validate();
  if (n_devices < 1) throw ConfigError("n_devices must be at least 1");
  PlacementPlan plan;
  plan.strategy = strategy;
  plan.n_devices = n_devices;
  plan.variant = config.variant;
  plan.layer_device.assign(config.depth + 1, 0);
  plan.root = 0;
  switch (strategy) {
    case Strategy::kSerial:
      if (n_devices != 1) throw ConfigError("serial strategy runs on exactly 1 device");
      plan.attn_devices = {0};
      return plan;
    case Strategy::kDataParallel:
      plan.attn_devices.resize(n_devices);
      std::iota(plan.attn_devices.begin(), plan.attn_devices.end(), 0);
      return plan;
    case Strategy::kModelParallel:
    case Strategy::kHybrid:
    case Strategy::kHybridIF:
      break;
  }
  if (n_devices != 4) {
    throw ConfigError(to_string(strategy) + " requires exactly 4 devices, got " + std::to_string(n_devices));
  }
  if (strategy == Strategy::kHybrid) plan.variant = FeedVariant::kNoInputFeeding;
  if (strategy == Strategy::kHybridIF) plan.variant = FeedVariant::kInputFeeding;
  if (!layer_devices.empty()) {
    if (static_cast<int>(layer_devices.size()) != config.depth) {
      throw ConfigError("layer_devices lists " + std::to_string(layer_devices.size()) +
                        " devices for " + std::to_string(config.depth) + " layers");
    }
    for (int l = 1; l <= config.depth; ++l) {
      const int d = layer_devices[l - 1];
      if (d < 0 || d >= n_devices) throw ConfigError("layer_devices entry out of range");
      plan.layer_device[l] = d;
    }
  } else {
    // Layer 1 (with the embeddings) on device 0, layer 2 on device 1, the
    // remaining layers on device 2.
    for (int l = 1; l <= config.depth; ++l) plan.layer_device[l] = std::min(l - 1, 2);
  }
  plan.layer_device[0] = plan.layer_device[1];
  plan.state_owner = 3;
  if (strategy == Strategy::kModelParallel) {
    plan.attn_devices = {3};
  } else {
    plan.attn_devices = {0, 1, 2, 3};
  }
  return plan;
}

}  // namespace hnmt
