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

#include <cstddef>
#include <cstdint>
#include <vector>

namespace hnmt {

using TokenSeq = std::vector<std::int32_t>;

// A mini-batch of parallel sentences. Sequences carry no BOS/EOS; the model
// adds BOS to the decoder input and EOS to the decoder output, so a target of
// n tokens yields n + 1 predicted positions.
struct Batch {
  std::vector<TokenSeq> src;
  std::vector<TokenSeq> tgt;
  // Corpus-wide sentence ids. Dropout masks are keyed by them so any
  // partition of the batch draws the same masks.
  std::vector<std::uint64_t> ids;

  std::size_t size() const { return src.size(); }
  std::size_t source_tokens() const;
  std::size_t target_tokens() const;  // predicted positions, EOS included
  // Sentences [begin, end) as a new batch.
  Batch slice(std::size_t begin, std::size_t end) const;
  // Throws ValueError on size mismatch, empty source or out-of-range id.
  void validate(int vocab_size) const;
};

// Time-major padded view of a batch.
struct BatchLayout {
  std::size_t batch = 0;
  std::size_t src_len = 0;  // max source length M
  std::size_t tgt_len = 0;  // max predicted length N (target + EOS)
  std::vector<std::size_t> src_lens;
  std::vector<std::size_t> tgt_lens;
  std::vector<std::vector<std::int32_t>> src_at;      // [t][b], PAD past the end
  std::vector<std::vector<std::int32_t>> tgt_in_at;   // [t][b], BOS at t = 0
  std::vector<std::vector<std::int32_t>> tgt_out_at;  // [t][b], EOS at t = n
  std::vector<std::vector<std::uint8_t>> src_keep_at;  // t < M_b
  std::vector<std::vector<std::uint8_t>> tgt_keep_at;  // t < N_b
  std::vector<std::uint64_t> sentence_ids;
  std::size_t source_tokens = 0;
  std::size_t target_tokens = 0;

  static BatchLayout build(const Batch& batch);
};

}  // namespace hnmt
