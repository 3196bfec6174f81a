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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "model/config.h"
#include "tensor/named_tensors.h"

namespace hnmt {

enum class ModelPart { kEmbedding, kLstmStack, kAttentionSoftmax };
enum class Side { kEncoder, kDecoder };

const char* to_string(ModelPart part);

struct ParamSpec {
  std::string name;
  Shape shape;
  ModelPart part;
  std::optional<Side> side;  // LSTM tensors only
  int layer = 0;             // 1-based LSTM layer; 0 otherwise
};

// Parameter names. LSTM layers are numbered from 1.
namespace param_names {
inline constexpr const char* kSrcEmbedding = "src_embedding";
inline constexpr const char* kTgtEmbedding = "tgt_embedding";
inline constexpr const char* kWAlpha = "attention.w_alpha";
inline constexpr const char* kWContext = "attention.w_context";
inline constexpr const char* kOutWeight = "output.weight";
inline constexpr const char* kOutBias = "output.bias";
std::string lstm_input(Side side, int layer);
std::string lstm_hidden(Side side, int layer);
std::string lstm_bias(Side side, int layer);
}  // namespace param_names

// Every parameter tensor in canonical order:
//   src_embedding V x E, tgt_embedding V x E,
//   per encoder layer: w_input in x 4H, w_hidden H x 4H, bias 1 x 4H,
//   per decoder layer: same (layer-1 input width E + H with input feeding),
//   attention.w_alpha H x H, attention.w_context 2H x H,
//   output.weight H x V, output.bias 1 x V.
// Gate blocks along the 4H axis are ordered input, forget, output, cell.
// w_context is stored as the right factor of [H; C] * w_context, i.e. the
// transpose of the H x 2H matrix in the usual left-multiplying notation.
std::vector<ParamSpec> param_specs(const ModelConfig& config);

struct PartCounts {
  std::uint64_t embedding = 0;
  std::uint64_t lstm_stack = 0;
  std::uint64_t attn_softmax = 0;
  std::uint64_t total = 0;
};

PartCounts param_count(const ModelConfig& config);

ModelPart part_of(const std::string& name);

template <typename T>
struct ModelParams {
  ModelConfig config;
  NamedTensors<T> tensors;

  // Uniform(-range, range) weights from a seeded Rng in canonical order;
  // biases zero except the forget gate block, which starts at 1.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed, double range = 0.1);

  // Zero tensors with the canonical layout.
  static ModelParams zeros(const ModelConfig& config);

  template <typename U>
  ModelParams<U> cast() const {
    return ModelParams<U>{config, tensors.template cast<U>()};
  }
};

extern template struct ModelParams<float>;
extern template struct ModelParams<double>;

}  // namespace hnmt
