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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "common/errors.h"
#include "model/batch.h"
#include "model/config.h"
#include "model/params.h"

namespace hnmt {

struct Hypothesis {
  TokenSeq tokens;  // after BOS; ends with EOS when finished by it
  double log_prob = 0.0;
  bool finished = false;
  double normalized_score = 0.0;  // log_prob / length_normalizer(tokens.size(), penalty)
};

// n^penalty.
inline double length_normalizer(std::size_t n, double penalty) {
  return std::pow(static_cast<double>(n), penalty);
}

struct BeamOptions {
  std::size_t beam_size = 5;
  double length_penalty = 1.0;
  std::size_t max_len = 100;  // tokens, EOS included
};

// A Scorer provides
//   State initial() const;
//   std::vector<double> step(State& state, std::int32_t token) const;
// where step feeds `token` (BOS first) and returns next-token log-probabilities.
// Tokens with -inf log-probability are never emitted.

namespace search_detail {

// Higher score first, then the lexicographically lower token sequence.
inline bool better(double a_score, const TokenSeq& a, double b_score, const TokenSeq& b) {
  if (a_score != b_score) return a_score > b_score;
  return a < b;
}

inline Hypothesis finish(TokenSeq tokens, double log_prob, double penalty) {
  Hypothesis h;
  h.normalized_score = tokens.empty() ? log_prob : log_prob / length_normalizer(tokens.size(), penalty);
  h.tokens = std::move(tokens);
  h.log_prob = log_prob;
  h.finished = true;
  return h;
}

}  // namespace search_detail

// Beam search. Each step expands every live hypothesis and keeps the
// beam_size best candidates by log-probability; candidates ending in EOS move
// to the finished pool, and live hypotheses reaching max_len are finished
// there too. The result is the pool's best normalized score.
template <typename Scorer>
Hypothesis beam_search(const Scorer& scorer, const BeamOptions& options) {
  if (options.beam_size < 1) throw ValueError("beam size must be >= 1");
  if (options.max_len < 1) throw ValueError("max_len must be >= 1");
  using State = decltype(scorer.initial());
  struct Live {
    TokenSeq tokens;
    double log_prob;
    State state;
  };
  struct Candidate {
    std::size_t parent;
    std::int32_t token;
    double log_prob;
    TokenSeq tokens;
  };

  std::vector<Live> live;
  live.push_back({{}, 0.0, scorer.initial()});
  std::vector<Hypothesis> pool;
  for (std::size_t len = 1; len <= options.max_len && !live.empty(); ++len) {
    std::vector<Candidate> candidates;
    for (std::size_t i = 0; i < live.size(); ++i) {
      const std::int32_t last = live[i].tokens.empty() ? kBosId : live[i].tokens.back();
      const std::vector<double> lp = scorer.step(live[i].state, last);
      for (std::size_t tok = 0; tok < lp.size(); ++tok) {
        if (std::isinf(lp[tok]) && lp[tok] < 0) continue;
        TokenSeq tokens = live[i].tokens;
        tokens.push_back(static_cast<std::int32_t>(tok));
        candidates.push_back({i, static_cast<std::int32_t>(tok), live[i].log_prob + lp[tok], std::move(tokens)});
      }
    }
    const std::size_t keep = std::min(options.beam_size, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                      [](const Candidate& a, const Candidate& b) {
                        return search_detail::better(a.log_prob, a.tokens, b.log_prob, b.tokens);
                      });
    std::vector<Live> next;
    for (std::size_t k = 0; k < keep; ++k) {
      Candidate& c = candidates[k];
      if (c.token == kEosId || len == options.max_len) {
        pool.push_back(search_detail::finish(std::move(c.tokens), c.log_prob, options.length_penalty));
      } else {
        next.push_back({std::move(c.tokens), c.log_prob, live[c.parent].state});
      }
    }
    live = std::move(next);
  }
  if (pool.empty()) throw ValueError("beam search found no hypothesis (every token has zero probability)");
  return *std::min_element(pool.begin(), pool.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return search_detail::better(a.normalized_score, a.tokens, b.normalized_score, b.tokens);
  });
}

// Argmax token per step (lowest id on ties) until EOS or max_len.
template <typename Scorer>
Hypothesis greedy_decode(const Scorer& scorer, std::size_t max_len, double length_penalty = 1.0) {
  if (max_len < 1) throw ValueError("max_len must be >= 1");
  auto state = scorer.initial();
  TokenSeq tokens;
  double log_prob = 0.0;
  std::int32_t last = kBosId;
  while (tokens.size() < max_len) {
    const std::vector<double> lp = scorer.step(state, last);
    const auto best = std::max_element(lp.begin(), lp.end());
    if (best == lp.end() || (std::isinf(*best) && *best < 0))
      throw ValueError("greedy decoding found no token with nonzero probability");
    last = static_cast<std::int32_t>(best - lp.begin());
    tokens.push_back(last);
    log_prob += *best;
    if (last == kEosId) break;
  }
  return search_detail::finish(std::move(tokens), log_prob, length_penalty);
}

// The translation model as a scorer over one source sentence.
template <typename T>
Hypothesis beam_search(const ModelParams<T>& params, const TokenSeq& src, const BeamOptions& options);
template <typename T>
Hypothesis greedy_decode(const ModelParams<T>& params, const TokenSeq& src, std::size_t max_len);

}  // namespace hnmt
