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

#include "model/seq2seq.h"

#include <algorithm>
#include <memory>

#include "common/errors.h"
#include "tensor/rng.h"

namespace hnmt {

template <typename T>
NodeId ParamBinder<T>::operator()(const std::string& name) {
  auto it = nodes_.find(name);
  if (it != nodes_.end()) return it->second;
  NodeId id = tape_.parameter(name, params_.at(name));
  nodes_.emplace(name, id);
  touched_.push_back(name);
  return id;
}

std::uint64_t dropout_site(Side side, int layer) {
  return (side == Side::kEncoder ? 0u : 1000u) + static_cast<std::uint64_t>(layer);
}

template <typename T>
GraphBuilder<T>::GraphBuilder(Tape<T>& tape, ParamBinder<T>& params, const ModelConfig& config,
                              const BatchLayout& layout, DropoutSpec dropout)
    : tape_(tape), params_(params), config_(config), layout_(layout), dropout_(dropout) {}

template <typename T>
NodeId GraphBuilder<T>::zeros(std::size_t cols) {
  return tape_.constant(Tensor<T>({layout_.batch, cols}));
}

template <typename T>
NodeId GraphBuilder<T>::dropout(NodeId x, std::uint64_t site, std::size_t t) {
  if (dropout_.rate <= 0.0) return x;
  const auto& shape = tape_.value(x).shape();
  Tensor<T> mask(shape);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - dropout_.rate));
  for (std::size_t b = 0; b < shape[0]; ++b) {
    const std::uint64_t sid = layout_.sentence_ids[b];
    for (std::size_t j = 0; j < shape[1]; ++j) {
      const bool drop = keyed_uniform(dropout_.seed, sid, site, t, j) < dropout_.rate;
      mask(b, j) = drop ? T(0) : keep_scale;
    }
  }
  return tape_.mul(x, tape_.constant(std::move(mask)));
}

template <typename T>
NodeId GraphBuilder<T>::source_embedding(std::size_t t) {
  NodeId e = tape_.embedding(params_(param_names::kSrcEmbedding), layout_.src_at[t]);
  return dropout(e, dropout_site(Side::kEncoder, 0), t);
}

template <typename T>
NodeId GraphBuilder<T>::target_embedding(std::size_t t) {
  NodeId e = tape_.embedding(params_(param_names::kTgtEmbedding), layout_.tgt_in_at[t]);
  return dropout(e, dropout_site(Side::kDecoder, 0), t);
}

template <typename T>
NodeId GraphBuilder<T>::decoder_input(NodeId embedding, NodeId feed) {
  if (config_.variant == FeedVariant::kNoInputFeeding) return embedding;
  return tape_.concat({embedding, feed}, 1);
}

template <typename T>
typename GraphBuilder<T>::Cell GraphBuilder<T>::cell(Side side, int layer, std::size_t t, NodeId x,
                                                     NodeId h_prev, NodeId c_prev) {
  const std::size_t h = config_.hidden_size;
  NodeId gates = tape_.add(tape_.matmul(x, params_(param_names::lstm_input(side, layer))),
                           tape_.matmul(h_prev, params_(param_names::lstm_hidden(side, layer))));
  gates = tape_.add_row_bias(gates, params_(param_names::lstm_bias(side, layer)));
  NodeId i = tape_.sigmoid(tape_.slice_cols(gates, 0, h));
  NodeId f = tape_.sigmoid(tape_.slice_cols(gates, h, 2 * h));
  NodeId o = tape_.sigmoid(tape_.slice_cols(gates, 2 * h, 3 * h));
  NodeId g = tape_.tanh(tape_.slice_cols(gates, 3 * h, 4 * h));
  NodeId c = tape_.add(tape_.mul(f, c_prev), tape_.mul(i, g));
  NodeId hn = tape_.mul(o, tape_.tanh(c));

  const auto& keep = side == Side::kEncoder ? layout_.src_keep_at[t] : layout_.tgt_keep_at[t];
  if (std::find(keep.begin(), keep.end(), 0) != keep.end()) {
    hn = tape_.select_rows(keep, hn, h_prev);
    c = tape_.select_rows(keep, c, c_prev);
  }
  NodeId up = layer < config_.depth ? dropout(hn, dropout_site(side, layer), t) : hn;
  return {hn, c, up};
}

template <typename T>
NodeId GraphBuilder<T>::sentence_states(std::span<const NodeId> top, std::size_t b) {
  const std::size_t m = layout_.src_lens[b];
  std::vector<RowRef> rows;
  for (std::size_t t = 0; t < m; ++t) rows.push_back({static_cast<std::int32_t>(t), static_cast<std::int32_t>(b)});
  return tape_.stack_rows(top.subspan(0, m), std::move(rows));
}

template <typename T>
NodeId GraphBuilder<T>::attention(NodeId queries, std::span<const AttentionSegment> segments) {
  NodeId projected = tape_.matmul(queries, params_(param_names::kWAlpha));
  std::vector<NodeId> contexts;
  std::int32_t row = 0;
  for (const auto& seg : segments) {
    NodeId q = projected;
    if (segments.size() > 1) {
      std::vector<RowRef> rows;
      for (std::size_t r = 0; r < seg.queries; ++r) rows.push_back({0, row + static_cast<std::int32_t>(r)});
      const NodeId src[] = {projected};
      q = tape_.stack_rows(src, std::move(rows));
    }
    row += static_cast<std::int32_t>(seg.queries);
    NodeId alpha = tape_.softmax_rows(tape_.matmul_nt(q, seg.states));
    contexts.push_back(tape_.matmul(alpha, seg.states));
  }
  NodeId context = contexts.size() == 1 ? contexts[0] : tape_.concat(contexts, 0);
  return tape_.tanh(tape_.matmul(tape_.concat({queries, context}, 1), params_(param_names::kWContext)));
}

template <typename T>
NodeId GraphBuilder<T>::output_loss(NodeId hc, std::vector<std::int32_t> targets, std::vector<T> weights) {
  NodeId logits = tape_.add_row_bias(tape_.matmul(hc, params_(param_names::kOutWeight)),
                                     params_(param_names::kOutBias));
  return tape_.cross_entropy_sum(logits, std::move(targets), std::move(weights));
}

namespace {

template <typename T>
struct Unrolled {
  std::vector<NodeId> enc_top;
  std::vector<NodeId> states;  // S_b per sentence
  std::vector<NodeId> h, c;    // per layer, current
  std::vector<NodeId> dec_top;
  std::vector<NodeId> hc;
  std::vector<NodeId> terms;
};

template <typename T>
void run_encoder(GraphBuilder<T>& g, const ModelConfig& config, Unrolled<T>& u) {
  const auto& layout = g.layout();
  const std::size_t hdim = config.hidden_size;
  u.h.assign(config.depth, g.zeros(hdim));
  u.c.assign(config.depth, u.h[0]);
  for (std::size_t t = 0; t < layout.src_len; ++t) {
    NodeId x = g.source_embedding(t);
    for (int l = 1; l <= config.depth; ++l) {
      auto cell = g.cell(Side::kEncoder, l, t, x, u.h[l - 1], u.c[l - 1]);
      u.h[l - 1] = cell.h;
      u.c[l - 1] = cell.c;
      x = cell.up;
    }
    u.enc_top.push_back(x);
  }
  for (std::size_t b = 0; b < layout.batch; ++b) u.states.push_back(g.sentence_states(u.enc_top, b));
}

// Runs the decoder; with `with_loss` also the attention-softmax part.
template <typename T>
void run_decoder(GraphBuilder<T>& g, const ModelConfig& config, Unrolled<T>& u, bool with_loss,
                 bool zero_feed) {
  const auto& layout = g.layout();
  auto& tape = g.tape();
  const bool feeding = config.variant == FeedVariant::kInputFeeding;
  NodeId feed = feeding ? g.zeros(config.hidden_size) : -1;
  for (std::size_t t = 0; t < layout.tgt_len; ++t) {
    NodeId x = g.decoder_input(g.target_embedding(t), feed);
    for (int l = 1; l <= config.depth; ++l) {
      auto cell = g.cell(Side::kDecoder, l, t, x, u.h[l - 1], u.c[l - 1]);
      u.h[l - 1] = cell.h;
      u.c[l - 1] = cell.c;
      x = cell.up;
    }
    u.dec_top.push_back(x);
    if (feeding && (with_loss || !zero_feed)) {
      std::vector<AttentionSegment> segs;
      for (std::size_t b = 0; b < layout.batch; ++b) segs.push_back({u.states[b], 1});
      NodeId hc = g.attention(x, segs);
      u.hc.push_back(hc);
      if (with_loss) {
        std::vector<T> weights(layout.batch);
        for (std::size_t b = 0; b < layout.batch; ++b) weights[b] = layout.tgt_keep_at[t][b] ? T(1) : T(0);
        u.terms.push_back(g.output_loss(hc, layout.tgt_out_at[t], std::move(weights)));
      }
      if (!zero_feed) feed = hc;
    }
  }
  if (feeding || !with_loss) return;
  std::vector<RowRef> rows;
  std::vector<AttentionSegment> segs;
  std::vector<std::int32_t> targets;
  for (std::size_t b = 0; b < layout.batch; ++b) {
    for (std::size_t t = 0; t < layout.tgt_lens[b]; ++t) {
      rows.push_back({static_cast<std::int32_t>(t), static_cast<std::int32_t>(b)});
      targets.push_back(layout.tgt_out_at[t][b]);
    }
    segs.push_back({u.states[b], layout.tgt_lens[b]});
  }
  NodeId queries = tape.stack_rows(u.dec_top, std::move(rows));
  NodeId hc = g.attention(queries, segs);
  std::vector<T> weights(targets.size(), T(1));
  u.terms.push_back(g.output_loss(hc, std::move(targets), std::move(weights)));
}

BatchLayout checked_layout(const ModelConfig& config, const Batch& batch) {
  if (batch.size() == 0) throw ValueError("empty batch");
  batch.validate(config.vocab_size);
  return BatchLayout::build(batch);
}

}  // namespace

template <typename T>
LossGraph build_loss(Tape<T>& tape, ParamBinder<T>& params, const ModelConfig& config,
                     const BatchLayout& layout, DropoutSpec dropout) {
  if (layout.batch == 0) throw ValueError("empty batch");
  GraphBuilder<T> g(tape, params, config, layout, dropout);
  Unrolled<T> u;
  run_encoder(g, config, u);
  run_decoder(g, config, u, true, false);
  LossGraph out;
  out.loss_sum = u.terms[0];
  for (std::size_t i = 1; i < u.terms.size(); ++i) out.loss_sum = tape.add(out.loss_sum, u.terms[i]);
  out.tokens = layout.target_tokens;
  out.loss_mean = tape.scale(out.loss_sum, T(1) / static_cast<T>(out.tokens));
  out.enc_top = std::move(u.enc_top);
  out.dec_top = std::move(u.dec_top);
  out.hc = std::move(u.hc);
  return out;
}

template <typename T>
LossAndGrads<T> loss_and_grads(const ModelParams<T>& params, const Batch& batch, DropoutSpec dropout) {
  const BatchLayout layout = checked_layout(params.config, batch);
  Tape<T> tape;
  ParamBinder<T> binder(tape, params.tensors);
  LossGraph graph = build_loss(tape, binder, params.config, layout, dropout);
  tape.backward(graph.loss_mean);
  LossAndGrads<T> out;
  out.loss = tape.value(graph.loss_mean)[0];
  out.tokens = graph.tokens;
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    const auto& name = params.tensors.name(i);
    NodeId node = binder.find(name);
    out.grads.add(name, node < 0 ? Tensor<T>(params.tensors.tensor(i).shape()) : tape.grad(node));
  }
  return out;
}

template <typename T>
double batch_nll_sum(const ModelParams<T>& params, const Batch& batch) {
  const BatchLayout layout = checked_layout(params.config, batch);
  Tape<T> tape;
  ParamBinder<T> binder(tape, params.tensors);
  LossGraph graph = build_loss(tape, binder, params.config, layout);
  return static_cast<double>(tape.value(graph.loss_sum)[0]);
}

template <typename T>
EncoderStates<T> encode(const ModelParams<T>& params, const std::vector<TokenSeq>& src) {
  EncoderStates<T> out;
  if (src.empty()) return out;
  Batch batch{src, std::vector<TokenSeq>(src.size()), {}};
  const BatchLayout layout = checked_layout(params.config, batch);
  Tape<T> tape;
  ParamBinder<T> binder(tape, params.tensors);
  GraphBuilder<T> g(tape, binder, params.config, layout);
  Unrolled<T> u;
  run_encoder(g, params.config, u);
  for (NodeId s : u.states) out.S.push_back(tape.value(s));
  for (int l = 0; l < params.config.depth; ++l) {
    out.final_h.push_back(tape.value(u.h[l]));
    out.final_c.push_back(tape.value(u.c[l]));
  }
  out.mask = Mask({layout.batch, layout.src_len});
  for (std::size_t b = 0; b < layout.batch; ++b)
    for (std::size_t t = 0; t < layout.src_lens[b]; ++t) out.mask(b, t) = 1;
  return out;
}

template <typename T>
std::vector<Tensor<T>> decode_hidden(const ModelParams<T>& params, const std::vector<TokenSeq>& src,
                                     const std::vector<TokenSeq>& tgt, bool zero_feed) {
  std::vector<Tensor<T>> out;
  if (src.empty()) return out;
  Batch batch{src, tgt, {}};
  const BatchLayout layout = checked_layout(params.config, batch);
  Tape<T> tape;
  ParamBinder<T> binder(tape, params.tensors);
  GraphBuilder<T> g(tape, binder, params.config, layout);
  Unrolled<T> u;
  run_encoder(g, params.config, u);
  run_decoder(g, params.config, u, false, zero_feed);
  const std::size_t hdim = params.config.hidden_size;
  for (std::size_t b = 0; b < layout.batch; ++b) {
    Tensor<T> hb({layout.tgt_lens[b], hdim});
    for (std::size_t t = 0; t < layout.tgt_lens[b]; ++t) {
      const auto& v = tape.value(u.dec_top[t]);
      for (std::size_t j = 0; j < hdim; ++j) hb(t, j) = v(b, j);
    }
    out.push_back(std::move(hb));
  }
  return out;
}

#define HNMT_INSTANTIATE_SEQ2SEQ(T)                                                                  \
  template class ParamBinder<T>;                                                                   \
  template class GraphBuilder<T>;                                                                  \
  template LossGraph build_loss<T>(Tape<T>&, ParamBinder<T>&, const ModelConfig&,                  \
                                   const BatchLayout&, DropoutSpec);                               \
  template LossAndGrads<T> loss_and_grads<T>(const ModelParams<T>&, const Batch&, DropoutSpec);    \
  template double batch_nll_sum<T>(const ModelParams<T>&, const Batch&);                           \
  template EncoderStates<T> encode<T>(const ModelParams<T>&, const std::vector<TokenSeq>&);        \
  template std::vector<Tensor<T>> decode_hidden<T>(const ModelParams<T>&,                          \
                                                   const std::vector<TokenSeq>&,                   \
                                                   const std::vector<TokenSeq>&, bool);

HNMT_INSTANTIATE_SEQ2SEQ(float)
HNMT_INSTANTIATE_SEQ2SEQ(double)

}  // namespace hnmt
