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

#include "model/params.h"

#include "common/errors.h"
#include "tensor/rng.h"

namespace hnmt {

std::string to_string(FeedVariant v) {
  return v == FeedVariant::kInputFeeding ? "input-feeding" : "no-input-feeding";
}

FeedVariant parse_feed_variant(const std::string& s) {
  if (s == "input-feeding" || s == "if") return FeedVariant::kInputFeeding;
  if (s == "no-input-feeding" || s == "noif") return FeedVariant::kNoInputFeeding;
  throw ConfigError("unknown model variant '" + s + "' (expected input-feeding or no-input-feeding)");
}

std::string to_string(Precision p) { return p == Precision::kFloat32 ? "float32" : "float64"; }

Precision parse_precision(const std::string& s) {
  if (s == "float32" || s == "32") return Precision::kFloat32;
  if (s == "float64" || s == "64") return Precision::kFloat64;
  throw ConfigError("unknown precision '" + s + "' (expected float32 or float64)");
}

void ModelConfig::validate() const {
  if (vocab_size < kNumReservedIds) {
    throw ConfigError("vocab_size must be at least 4 (PAD, BOS, EOS, UNK), got " +
                      std::to_string(vocab_size));
  }
  if (embed_size < 1) throw ConfigError("embed_size must be positive");
  if (hidden_size < 1) throw ConfigError("hidden_size must be positive");
  if (depth < 1) throw ConfigError("depth must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

const char* to_string(ModelPart part) {
  switch (part) {
    case ModelPart::kEmbedding: return "embedding";
    case ModelPart::kLstmStack: return "lstm-stack";
    case ModelPart::kAttentionSoftmax: return "attention-softmax";
  }
  return "?";
}

namespace param_names {
namespace {
std::string prefix(Side side, int layer) {
  return std::string(side == Side::kEncoder ? "encoder." : "decoder.") + std::to_string(layer);
}
}  // namespace
std::string lstm_input(Side side, int layer) { return prefix(side, layer) + ".w_input"; }
std::string lstm_hidden(Side side, int layer) { return prefix(side, layer) + ".w_hidden"; }
std::string lstm_bias(Side side, int layer) { return prefix(side, layer) + ".bias"; }
}  // namespace param_names

std::vector<ParamSpec> param_specs(const ModelConfig& config) {
  config.validate();
  const std::size_t v = config.vocab_size, e = config.embed_size, h = config.hidden_size;
  std::vector<ParamSpec> specs;
  specs.push_back({param_names::kSrcEmbedding, {v, e}, ModelPart::kEmbedding, std::nullopt, 0});
  specs.push_back({param_names::kTgtEmbedding, {v, e}, ModelPart::kEmbedding, std::nullopt, 0});
  for (Side side : {Side::kEncoder, Side::kDecoder}) {
    for (int l = 1; l <= config.depth; ++l) {
      std::size_t in = h;
      if (l == 1) in = side == Side::kEncoder ? e : static_cast<std::size_t>(config.decoder_input_width());
      specs.push_back({param_names::lstm_input(side, l), {in, 4 * h}, ModelPart::kLstmStack, side, l});
      specs.push_back({param_names::lstm_hidden(side, l), {h, 4 * h}, ModelPart::kLstmStack, side, l});
      specs.push_back({param_names::lstm_bias(side, l), {1, 4 * h}, ModelPart::kLstmStack, side, l});
    }
  }
  specs.push_back({param_names::kWAlpha, {h, h}, ModelPart::kAttentionSoftmax, std::nullopt, 0});
  specs.push_back({param_names::kWContext, {2 * h, h}, ModelPart::kAttentionSoftmax, std::nullopt, 0});
  specs.push_back({param_names::kOutWeight, {h, v}, ModelPart::kAttentionSoftmax, std::nullopt, 0});
  specs.push_back({param_names::kOutBias, {1, v}, ModelPart::kAttentionSoftmax, std::nullopt, 0});
  return specs;
}

PartCounts param_count(const ModelConfig& config) {
  PartCounts counts;
  for (const auto& spec : param_specs(config)) {
    const std::uint64_t n = shape_numel(spec.shape);
    switch (spec.part) {
      case ModelPart::kEmbedding: counts.embedding += n; break;
      case ModelPart::kLstmStack: counts.lstm_stack += n; break;
      case ModelPart::kAttentionSoftmax: counts.attn_softmax += n; break;
    }
    counts.total += n;
  }
  return counts;
}

ModelPart part_of(const std::string& name) {
  if (name == param_names::kSrcEmbedding || name == param_names::kTgtEmbedding) return ModelPart::kEmbedding;
  if (name.rfind("encoder.", 0) == 0 || name.rfind("decoder.", 0) == 0) return ModelPart::kLstmStack;
  if (name.rfind("attention.", 0) == 0 || name.rfind("output.", 0) == 0) return ModelPart::kAttentionSoftmax;
  throw ValueError("unknown parameter '" + name + "'");
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ModelConfig& config) {
  ModelParams<T> p;
  p.config = config;
  for (const auto& spec : param_specs(config)) p.tensors.add(spec.name, Tensor<T>(spec.shape));
  return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::init(const ModelConfig& config, std::uint64_t seed, double range) {
  ModelParams<T> p;
  p.config = config;
  Rng rng(seed);
  const std::size_t h = config.hidden_size;
  for (const auto& spec : param_specs(config)) {
    Tensor<T> t(spec.shape);
    const bool is_bias = spec.name.ends_with(".bias");
    if (is_bias) {
      if (spec.part == ModelPart::kLstmStack)
        for (std::size_t j = h; j < 2 * h; ++j) t[j] = T(1);
    } else {
      for (auto& x : t.values()) x = static_cast<T>(rng.uniform(-range, range));
    }
    p.tensors.add(spec.name, std::move(t));
  }
  return p;
}

template struct ModelParams<float>;
template struct ModelParams<double>;

}  // namespace hnmt
