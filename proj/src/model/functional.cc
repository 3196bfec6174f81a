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

#include "model/functional.h"

#include <cmath>

#include "common/errors.h"
#include "model/seq2seq.h"

namespace hnmt {

template <typename T>
LstmWeights<T> lstm_weights(const ModelParams<T>& params, Side side, int layer) {
  const auto& t = params.tensors;
  return {t.at(param_names::lstm_input(side, layer)), t.at(param_names::lstm_hidden(side, layer)),
          t.at(param_names::lstm_bias(side, layer))};
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> lstm_cell(const Tensor<T>& x, const Tensor<T>& h_prev,
                                          const Tensor<T>& c_prev, const LstmWeights<T>& w) {
  require_matrix(w.w_hidden, "lstm_cell");
  const std::size_t h = w.w_hidden.rows();
  if (w.w_hidden.cols() != 4 * h || w.w_input.cols() != 4 * h || w.bias.size() != 4 * h) {
    throw DimensionError("lstm_cell: gate weights must have 4 x " + std::to_string(h) + " columns");
  }
  Tensor<T> gates = add_row_bias(add(matmul(x, w.w_input), matmul(h_prev, w.w_hidden)), w.bias);
  Tensor<T> i = sigmoid(slice_cols(gates, 0, h));
  Tensor<T> f = sigmoid(slice_cols(gates, h, 2 * h));
  Tensor<T> o = sigmoid(slice_cols(gates, 2 * h, 3 * h));
  Tensor<T> g = tanh(slice_cols(gates, 3 * h, 4 * h));
  Tensor<T> c = add(mul(f, c_prev), mul(i, g));
  Tensor<T> hn = mul(o, tanh(c));
  return {std::move(hn), std::move(c)};
}

template <typename T>
Tensor<T> attention_scores(const Tensor<T>& h, const Tensor<T>& s, const Tensor<T>& w_alpha,
                           const Mask* src_mask) {
  Tensor<T> scores = matmul_nt(matmul(h, w_alpha), s);
  if (src_mask == nullptr) return softmax_rows(scores);
  // A source mask may be given as a single row shared by every query.
  if (src_mask->rows() == 1 && scores.rows() != 1) {
    Mask full({scores.rows(), scores.cols()});
    if (src_mask->cols() != scores.cols()) {
      throw DimensionError("attention_scores: mask " + shape_string(src_mask->shape()) +
                           " does not fit scores " + shape_string(scores.shape()));
    }
    for (std::size_t r = 0; r < scores.rows(); ++r)
      for (std::size_t j = 0; j < scores.cols(); ++j) full(r, j) = (*src_mask)(0, j);
    return softmax_rows(scores, &full);
  }
  return softmax_rows(scores, src_mask);
}

template <typename T>
Tensor<T> context_vectors(const Tensor<T>& alpha, const Tensor<T>& s) {
  return matmul(alpha, s);
}

template <typename T>
Tensor<T> context_decoded(const Tensor<T>& h, const Tensor<T>& c, const Tensor<T>& w_c) {
  return tanh(matmul(concat({h, c}, 1), w_c));
}

template <typename T>
Tensor<T> output_probs(const Tensor<T>& hc, const Tensor<T>& f, const Tensor<T>& bias) {
  return softmax_rows(add_row_bias(matmul(hc, f), bias));
}

namespace {
template <typename T>
double nll_loss_impl(const Tensor<T>& probs, const std::vector<std::int32_t>& tgt,
                     const std::vector<std::uint8_t>& mask) {
  require_matrix(probs, "nll_loss");
  if (tgt.size() != probs.rows() || mask.size() != probs.rows()) {
    throw DimensionError("nll_loss: " + std::to_string(tgt.size()) + " targets for probabilities " +
                         shape_string(probs.shape()));
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    if (!mask[r]) continue;
    if (tgt[r] < 0 || static_cast<std::size_t>(tgt[r]) >= probs.cols())
      throw ValueError("nll_loss: target id " + std::to_string(tgt[r]) + " out of range");
    total -= std::log(static_cast<double>(probs(r, tgt[r])));
    ++count;
  }
  if (count == 0) throw ValueError("nll_loss: no unmasked target tokens");
  return total / static_cast<double>(count);
}
}  // namespace

double nll_loss(const Tensor<double>& probs, const std::vector<std::int32_t>& tgt,
                const std::vector<std::uint8_t>& mask) {
  return nll_loss_impl(probs, tgt, mask);
}

double nll_loss(const Tensor<float>& probs, const std::vector<std::int32_t>& tgt,
                const std::vector<std::uint8_t>& mask) {
  return nll_loss_impl(probs, tgt, mask);
}

template <typename T>
StepDecoder<T>::StepDecoder(const ModelParams<T>& params, const TokenSeq& src) : params_(params) {
  EncoderStates<T> enc = encode(params, std::vector<TokenSeq>{src});
  states_ = std::move(enc.S[0]);
  initial_.h = std::move(enc.final_h);
  initial_.c = std::move(enc.final_c);
  initial_.feed = Tensor<T>({1, static_cast<std::size_t>(params.config.hidden_size)});
}

template <typename T>
std::vector<double> StepDecoder<T>::step(State& state, std::int32_t token) const {
  const auto& cfg = params_.config;
  if (token < 0 || token >= cfg.vocab_size) throw ValueError("token id out of range");
  const auto& emb = params_.tensors.at(param_names::kTgtEmbedding);
  auto row = emb.row(token);
  Tensor<T> x({1, emb.cols()}, std::vector<T>(row.begin(), row.end()));
  if (cfg.variant == FeedVariant::kInputFeeding) x = concat({x, state.feed}, 1);
  for (int l = 1; l <= cfg.depth; ++l) {
    auto [h, c] = lstm_cell(x, state.h[l - 1], state.c[l - 1], lstm_weights(params_, Side::kDecoder, l));
    state.h[l - 1] = h;
    state.c[l - 1] = std::move(c);
    x = std::move(h);
  }
  const auto& t = params_.tensors;
  Tensor<T> alpha = attention_scores(x, states_, t.at(param_names::kWAlpha));
  Tensor<T> hc = context_decoded(x, context_vectors(alpha, states_), t.at(param_names::kWContext));
  Tensor<T> logits = add_row_bias(matmul(hc, t.at(param_names::kOutWeight)), t.at(param_names::kOutBias));
  Tensor<T> logp = log_softmax_rows(logits);
  state.feed = std::move(hc);
  return std::vector<double>(logp.data(), logp.data() + logp.size());
}

#define HNMT_INSTANTIATE_FUNCTIONAL(T)                                                          \
  template LstmWeights<T> lstm_weights<T>(const ModelParams<T>&, Side, int);                   \
  template std::pair<Tensor<T>, Tensor<T>> lstm_cell<T>(const Tensor<T>&, const Tensor<T>&,    \
                                                        const Tensor<T>&, const LstmWeights<T>&); \
  template Tensor<T> attention_scores<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                         const Mask*);                                          \
  template Tensor<T> context_vectors<T>(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> context_decoded<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> output_probs<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);    \
  template class StepDecoder<T>;

HNMT_INSTANTIATE_FUNCTIONAL(float)
HNMT_INSTANTIATE_FUNCTIONAL(double)

}  // namespace hnmt
