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
#include <unordered_map>
#include <vector>

#include "model/batch.h"

namespace hnmt {

// Token <-> id bijection. Ids 0..3 are always <pad>, <s>, </s>, <unk>.
class Vocab {
 public:
  // Only the reserved tokens.
  Vocab();
  // Reserved tokens followed by `tokens` in order. Throws ValueError on a
  // duplicate or a reserved spelling.
  static Vocab from_tokens(const std::vector<std::string>& tokens);
  // The max_size - 4 most frequent tokens of whitespace-tokenized files, ties
  // broken lexicographically. Throws IoError on unreadable files and
  // ValueError when the corpus has no tokens or max_size < 4.
  static Vocab build(const std::vector<std::string>& files, std::size_t max_size);
  // One token per line in id order, reserved tokens included.
  static Vocab load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return tokens_.size(); }
  // kUnkId for unknown tokens.
  std::int32_t id(const std::string& token) const;
  // Throws ValueError for ids out of range.
  const std::string& token(std::int32_t id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  TokenSeq encode(const std::string& line) const;
  // Space-joined tokens, stopping at the first EOS; PAD and BOS are dropped.
  std::string decode(const TokenSeq& ids) const;

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> ids_;
};

std::vector<std::string> split_tokens(const std::string& line);

}  // namespace hnmt
