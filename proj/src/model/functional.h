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
#include <utility>
#include <vector>

#include "model/batch.h"
#include "model/params.h"
#include "tensor/tensor.h"

namespace hnmt {

// Eager (tape-free) versions of the model's building blocks, used for
// inference and as reference points in tests.

template <typename T>
struct LstmWeights {
  const Tensor<T>& w_input;   // in x 4H
  const Tensor<T>& w_hidden;  // H x 4H
  const Tensor<T>& bias;      // 1 x 4H
};

template <typename T>
LstmWeights<T> lstm_weights(const ModelParams<T>& params, Side side, int layer);

// Returns (h, c).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_cell(const Tensor<T>& x, const Tensor<T>& h_prev,
                                          const Tensor<T>& c_prev, const LstmWeights<T>& w);

// alpha = softmax over source positions of H W_alpha S^T; masked columns are 0.
template <typename T>
Tensor<T> attention_scores(const Tensor<T>& h, const Tensor<T>& s, const Tensor<T>& w_alpha,
                           const Mask* src_mask = nullptr);

template <typename T>
Tensor<T> context_vectors(const Tensor<T>& alpha, const Tensor<T>& s);

// tanh([H; C] W_c) with W_c stored as 2H x H.
template <typename T>
Tensor<T> context_decoded(const Tensor<T>& h, const Tensor<T>& c, const Tensor<T>& w_c);

template <typename T>
Tensor<T> output_probs(const Tensor<T>& hc, const Tensor<T>& f, const Tensor<T>& bias);

// Mean over unmasked rows of -log P[i][tgt[i]]. Throws ValueError when every
// row is masked.
double nll_loss(const Tensor<double>& probs, const std::vector<std::int32_t>& tgt,
                const std::vector<std::uint8_t>& mask);
double nll_loss(const Tensor<float>& probs, const std::vector<std::int32_t>& tgt,
                const std::vector<std::uint8_t>& mask);

// Incremental decoder for one source sentence.
template <typename T>
class StepDecoder {
 public:
  struct State {
    std::vector<Tensor<T>> h;  // per layer, 1 x H
    std::vector<Tensor<T>> c;
    Tensor<T> feed;  // previous H_c (input feeding)
  };

  StepDecoder(const ModelParams<T>& params, const TokenSeq& src);

  State initial() const { return initial_; }
  // Feeds `token`, advances `state`, and returns log-probabilities over the
  // vocabulary for the next output.
  std::vector<double> step(State& state, std::int32_t token) const;

 private:
  const ModelParams<T>& params_;
  Tensor<T> states_;  // M x H
  State initial_;
};

}  // namespace hnmt
