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
#include <string>
#include <utility>
#include <vector>

#include "data/vocab.h"
#include "model/batch.h"

namespace hnmt {

struct ParallelCorpus {
  std::vector<TokenSeq> src;
  std::vector<TokenSeq> tgt;

  std::size_t size() const { return src.size(); }
  bool empty() const { return src.empty(); }
  // The listed sentences, with their corpus indices as ids.
  Batch batch(const std::vector<std::size_t>& indices) const;
  // Every sentence in order, in batches of at most batch_size.
  std::vector<Batch> sequential_batches(std::size_t batch_size) const;
};

// Lines of a UTF-8 text file without trailing "\r" or "\n". IoError when
// unreadable.
std::vector<std::string> read_lines(const std::string& path);
void write_lines(const std::string& path, const std::vector<std::string>& lines);

// Line-aligned source/target files. Throws IoError on a line-count mismatch
// and ValueError on an empty source line.
ParallelCorpus load_parallel(const std::string& src_path, const std::string& tgt_path, const Vocab& vocab);

enum class ToyTask { kCopy, kReverse };

std::string to_string(ToyTask t);
ToyTask parse_toy_task(const std::string& s);

struct ToyCorpus {
  std::vector<std::string> src;
  std::vector<std::string> tgt;
};

// Random sentences of 1..max_len tokens drawn from w0 .. w{vocab_size-5}, so a
// vocabulary of vocab_size (4 reserved ids included) covers them. The target
// is the source (copy) or the source reversed. Throws ValueError when
// vocab_size < 5 or max_len < 1.
ToyCorpus gen_toy_corpus(ToyTask task, std::size_t n_sentences, std::size_t max_len, std::size_t vocab_size,
                         std::uint64_t seed);

}  // namespace hnmt
