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
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "autograd/tape.h"
#include "model/batch.h"
#include "model/params.h"

namespace hnmt {

// Registers model parameters on a tape the first time they are used, and
// remembers which ones were touched.
template <typename T>
class ParamBinder {
 public:
  ParamBinder(Tape<T>& tape, const NamedTensors<T>& params) : tape_(tape), params_(params) {}

  NodeId operator()(const std::string& name);
  // Node of an already-bound parameter, or -1.
  NodeId find(const std::string& name) const {
    auto it = nodes_.find(name);
    return it == nodes_.end() ? -1 : it->second;
  }
  const std::vector<std::string>& touched() const { return touched_; }

 private:
  Tape<T>& tape_;
  const NamedTensors<T>& params_;
  std::unordered_map<std::string, NodeId> nodes_;
  std::vector<std::string> touched_;
};

struct DropoutSpec {
  double rate = 0.0;
  std::uint64_t seed = 0;
};

// Dropout sites, one per (side, layer) output plus the two embeddings.
std::uint64_t dropout_site(Side side, int layer);

// One attention group: a sentence's encoder states and how many consecutive
// query rows belong to it.
struct AttentionSegment {
  NodeId states;  // M_b x H
  std::size_t queries;
};

// Records the model's building blocks on a tape. Rows of every per-step
// tensor follow the batch layout's sentence order.
template <typename T>
class GraphBuilder {
 public:
  struct Cell {
    NodeId h;
    NodeId c;
    NodeId up;  // h after dropout; the input of the layer above
  };

  GraphBuilder(Tape<T>& tape, ParamBinder<T>& params, const ModelConfig& config,
               const BatchLayout& layout, DropoutSpec dropout = {});

  Tape<T>& tape() { return tape_; }
  const BatchLayout& layout() const { return layout_; }

  NodeId zeros(std::size_t cols);
  NodeId source_embedding(std::size_t t);
  NodeId target_embedding(std::size_t t);
  // Decoder layer-1 input: the embedding, or [embedding; feed] with input feeding.
  NodeId decoder_input(NodeId embedding, NodeId feed);
  // One LSTM step for the whole batch. Rows whose sentence has ended carry
  // h_prev and c_prev through unchanged.
  Cell cell(Side side, int layer, std::size_t t, NodeId x, NodeId h_prev, NodeId c_prev);
  // Encoder states of sentence b from the per-step top-layer outputs.
  NodeId sentence_states(std::span<const NodeId> top, std::size_t b);
  // H_c = tanh([Q; alpha * S] W_c) with alpha computed per segment.
  NodeId attention(NodeId queries, std::span<const AttentionSegment> segments);
  // Token-summed cross entropy of softmax(H_c F + b).
  NodeId output_loss(NodeId hc, std::vector<std::int32_t> targets, std::vector<T> weights);

 private:
  NodeId dropout(NodeId x, std::uint64_t site, std::size_t t);

  Tape<T>& tape_;
  ParamBinder<T>& params_;
  const ModelConfig& config_;
  const BatchLayout& layout_;
  DropoutSpec dropout_;
};

// Node handles of a full forward graph.
struct LossGraph {
  NodeId loss_sum = -1;   // token-summed NLL
  NodeId loss_mean = -1;  // loss_sum / target tokens
  std::size_t tokens = 0;
  std::vector<NodeId> enc_top;  // per source step
  std::vector<NodeId> dec_top;  // per target step
  std::vector<NodeId> hc;       // per target step (input feeding only)
};

// Teacher-forced forward pass of the whole model onto `tape`.
template <typename T>
LossGraph build_loss(Tape<T>& tape, ParamBinder<T>& params, const ModelConfig& config,
                     const BatchLayout& layout, DropoutSpec dropout = {});

// Loss and gradients of a batch computed on a single tape.
template <typename T>
struct LossAndGrads {
  T loss = T(0);  // token-mean NLL
  std::size_t tokens = 0;
  GradientSet<T> grads;  // every model parameter, canonical order
};

template <typename T>
LossAndGrads<T> loss_and_grads(const ModelParams<T>& params, const Batch& batch,
                               DropoutSpec dropout = {});

// Token-summed NLL without building gradients (evaluation, dropout off).
template <typename T>
double batch_nll_sum(const ModelParams<T>& params, const Batch& batch);

// Encoder output for a batch of source sentences.
template <typename T>
struct EncoderStates {
  std::vector<Tensor<T>> S;        // per sentence, M_b x H
  std::vector<Tensor<T>> final_h;  // per layer, B x H
  std::vector<Tensor<T>> final_c;
  Mask mask;                       // B x M, 1 on real positions
};

template <typename T>
EncoderStates<T> encode(const ModelParams<T>& params, const std::vector<TokenSeq>& src);

// Top-layer decoder states per sentence, (|tgt| + 1) x H, teacher-forced from
// BOS + tgt. With input feeding the attention output is fed back, unless
// `zero_feed` forces it to zero.
template <typename T>
std::vector<Tensor<T>> decode_hidden(const ModelParams<T>& params, const std::vector<TokenSeq>& src,
                                     const std::vector<TokenSeq>& tgt, bool zero_feed = false);

}  // namespace hnmt
