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

#include "model/batch.h"

#include <algorithm>
#include <string>

#include "common/errors.h"
#include "model/config.h"

namespace hnmt {

std::size_t Batch::source_tokens() const {
  std::size_t n = 0;
  for (const auto& s : src) n += s.size();
  return n;
}

std::size_t Batch::target_tokens() const {
  std::size_t n = 0;
  for (const auto& s : tgt) n += s.size() + 1;
  return n;
}

Batch Batch::slice(std::size_t begin, std::size_t end) const {
  Batch out;
  out.src.assign(src.begin() + begin, src.begin() + end);
  out.tgt.assign(tgt.begin() + begin, tgt.begin() + end);
  if (!ids.empty()) out.ids.assign(ids.begin() + begin, ids.begin() + end);
  return out;
}

void Batch::validate(int vocab_size) const {
  if (src.size() != tgt.size()) {
    throw ValueError("batch has " + std::to_string(src.size()) + " sources but " +
                     std::to_string(tgt.size()) + " targets");
  }
  if (!ids.empty() && ids.size() != src.size()) throw ValueError("batch ids do not match batch size");
  for (std::size_t b = 0; b < src.size(); ++b) {
    if (src[b].empty()) {
      throw ValueError("sentence " + std::to_string(b) +
                       " has an empty source; attention would have no valid position");
    }
    for (const auto* seq : {&src[b], &tgt[b]}) {
      for (auto id : *seq) {
        if (id < 0 || id >= vocab_size) {
          throw ValueError("token id " + std::to_string(id) + " out of range for vocabulary of " +
                           std::to_string(vocab_size));
        }
      }
    }
  }
}

BatchLayout BatchLayout::build(const Batch& batch) {
  BatchLayout l;
  l.batch = batch.size();
  for (std::size_t b = 0; b < l.batch; ++b) {
    l.src_lens.push_back(batch.src[b].size());
    l.tgt_lens.push_back(batch.tgt[b].size() + 1);
    l.src_len = std::max(l.src_len, batch.src[b].size());
    l.tgt_len = std::max(l.tgt_len, batch.tgt[b].size() + 1);
    l.sentence_ids.push_back(batch.ids.empty() ? b : batch.ids[b]);
  }
  l.source_tokens = batch.source_tokens();
  l.target_tokens = batch.target_tokens();
  l.src_at.assign(l.src_len, std::vector<std::int32_t>(l.batch, kPadId));
  l.src_keep_at.assign(l.src_len, std::vector<std::uint8_t>(l.batch, 0));
  for (std::size_t t = 0; t < l.src_len; ++t) {
    for (std::size_t b = 0; b < l.batch; ++b) {
      if (t < l.src_lens[b]) {
        l.src_at[t][b] = batch.src[b][t];
        l.src_keep_at[t][b] = 1;
      }
    }
  }
  l.tgt_in_at.assign(l.tgt_len, std::vector<std::int32_t>(l.batch, kPadId));
  l.tgt_out_at.assign(l.tgt_len, std::vector<std::int32_t>(l.batch, kPadId));
  l.tgt_keep_at.assign(l.tgt_len, std::vector<std::uint8_t>(l.batch, 0));
  for (std::size_t t = 0; t < l.tgt_len; ++t) {
    for (std::size_t b = 0; b < l.batch; ++b) {
      const auto& y = batch.tgt[b];
      if (t >= l.tgt_lens[b]) continue;
      l.tgt_in_at[t][b] = t == 0 ? kBosId : y[t - 1];
      l.tgt_out_at[t][b] = t < y.size() ? y[t] : kEosId;
      l.tgt_keep_at[t][b] = 1;
    }
  }
  return l;
}

}  // namespace hnmt
