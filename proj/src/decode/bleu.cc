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

#include "decode/bleu.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "common/errors.h"
#include "data/vocab.h"

namespace hnmt {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& toks, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) ++out[{toks.begin() + i, toks.begin() + i + n}];
  return out;
}

}  // namespace

BleuStats corpus_bleu_stats(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  if (hypotheses.size() != references.size()) {
    throw ValueError("BLEU needs one reference per hypothesis (" + std::to_string(hypotheses.size()) + " vs " +
                     std::to_string(references.size()) + ")");
  }
  if (hypotheses.empty()) throw ValueError("BLEU of an empty corpus");
  std::size_t matched[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  BleuStats s;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto hyp = split_tokens(hypotheses[i]);
    const auto ref = split_tokens(references[i]);
    s.hyp_length += hyp.size();
    s.ref_length += ref.size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const NgramCounts h = ngrams(hyp, n), r = ngrams(ref, n);
      for (const auto& [gram, count] : h) {
        auto it = r.find(gram);
        matched[n - 1] += std::min(count, it == r.end() ? std::size_t{0} : it->second);
        total[n - 1] += count;
      }
    }
  }
  double log_sum = 0.0;
  int orders = 0;
  bool zero = s.hyp_length == 0;
  for (int n = 0; n < 4; ++n) {
    if (total[n] == 0) continue;
    s.precisions[n] = static_cast<double>(matched[n]) / static_cast<double>(total[n]);
    if (matched[n] == 0) zero = true;
    else log_sum += std::log(s.precisions[n]);
    ++orders;
  }
  s.brevity_penalty = s.hyp_length == 0 ? 0.0
                      : s.hyp_length < s.ref_length
                          ? std::exp(1.0 - static_cast<double>(s.ref_length) / static_cast<double>(s.hyp_length))
                          : 1.0;
  s.score = zero ? 0.0 : 100.0 * s.brevity_penalty * std::exp(log_sum / orders);
  return s;
}

double corpus_bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  return corpus_bleu_stats(hypotheses, references).score;
}

}  // namespace hnmt
