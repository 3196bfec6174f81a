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

namespace hnmt {

struct BleuStats {
  double score = 0.0;  // 0..100
  double precisions[4] = {0, 0, 0, 0};
  double brevity_penalty = 0.0;
  std::size_t hyp_length = 0;
  std::size_t ref_length = 0;
};

// Corpus BLEU-4 over whitespace-tokenized sentences, one reference each:
// clipped n-gram counts summed over the corpus, geometric mean of the 1..4
// gram precisions, brevity penalty exp(1 - r/c) when c < r, no smoothing.
// Orders with no hypothesis n-gram at all (every sentence shorter than n)
// are left out of the mean. Throws ValueError on empty or mismatched input.
BleuStats corpus_bleu_stats(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);
double corpus_bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);

}  // namespace hnmt
