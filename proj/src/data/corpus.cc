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

#include "data/corpus.h"

#include <algorithm>
#include <fstream>

#include "common/errors.h"
#include "tensor/rng.h"

namespace hnmt {

Batch ParallelCorpus::batch(const std::vector<std::size_t>& indices) const {
  Batch b;
  for (std::size_t i : indices) {
    if (i >= size()) throw ValueError("sentence index " + std::to_string(i) + " outside the corpus");
    b.src.push_back(src[i]);
    b.tgt.push_back(tgt[i]);
    b.ids.push_back(i);
  }
  return b;
}

std::vector<Batch> ParallelCorpus::sequential_batches(std::size_t batch_size) const {
  if (batch_size == 0) throw ValueError("batch size must be positive");
  std::vector<Batch> out;
  for (std::size_t begin = 0; begin < size(); begin += batch_size) {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < std::min(size(), begin + batch_size); ++i) idx.push_back(i);
    out.push_back(batch(idx));
  }
  return out;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  if (in.bad()) throw IoError("error reading '" + path + "'");
  return lines;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (const auto& line : lines) out << line << '\n';
  if (!out) throw IoError("error writing '" + path + "'");
}

ParallelCorpus load_parallel(const std::string& src_path, const std::string& tgt_path, const Vocab& vocab) {
  const auto src = read_lines(src_path);
  const auto tgt = read_lines(tgt_path);
  if (src.size() != tgt.size()) {
    throw IoError("'" + src_path + "' has " + std::to_string(src.size()) + " lines but '" + tgt_path + "' has " +
                  std::to_string(tgt.size()));
  }
  ParallelCorpus corpus;
  for (std::size_t i = 0; i < src.size(); ++i) {
    corpus.src.push_back(vocab.encode(src[i]));
    corpus.tgt.push_back(vocab.encode(tgt[i]));
    if (corpus.src.back().empty())
      throw ValueError("empty source sentence at line " + std::to_string(i + 1) + " of '" + src_path + "'");
  }
  return corpus;
}

std::string to_string(ToyTask t) { return t == ToyTask::kCopy ? "copy" : "reverse"; }

ToyTask parse_toy_task(const std::string& s) {
  if (s == "copy") return ToyTask::kCopy;
  if (s == "reverse") return ToyTask::kReverse;
  throw ConfigError("unknown toy task '" + s + "' (expected copy or reverse)");
}

ToyCorpus gen_toy_corpus(ToyTask task, std::size_t n_sentences, std::size_t max_len, std::size_t vocab_size,
                         std::uint64_t seed) {
  if (vocab_size < 5) throw ValueError("toy corpus needs a vocabulary of at least 5");
  if (max_len < 1) throw ValueError("toy corpus needs max_len >= 1");
  Rng rng(seed);
  const std::size_t words = vocab_size - 4;
  ToyCorpus out;
  for (std::size_t i = 0; i < n_sentences; ++i) {
    const std::size_t len = 1 + rng.below(max_len);
    std::vector<std::string> toks;
    for (std::size_t k = 0; k < len; ++k) toks.push_back("w" + std::to_string(rng.below(words)));
    auto join = [](const std::vector<std::string>& v) {
      std::string s;
      for (const auto& t : v) s += (s.empty() ? "" : " ") + t;
      return s;
    };
    out.src.push_back(join(toks));
    if (task == ToyTask::kReverse) std::reverse(toks.begin(), toks.end());
    out.tgt.push_back(join(toks));
  }
  return out;
}

}  // namespace hnmt
