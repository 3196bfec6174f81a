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

#include "data/vocab.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "common/errors.h"
#include "data/corpus.h"
#include "model/config.h"

namespace hnmt {

namespace {

const char* const kReserved[] = {"<pad>", "<s>", "</s>", "<unk>"};

}  // namespace

std::vector<std::string> split_tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

Vocab::Vocab() {
  for (const char* r : kReserved) add(r);
}

void Vocab::add(const std::string& token) {
  if (!ids_.emplace(token, static_cast<std::int32_t>(tokens_.size())).second)
    throw ValueError("duplicate vocabulary token '" + token + "'");
  tokens_.push_back(token);
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens) {
  Vocab v;
  for (const auto& t : tokens) v.add(t);
  return v;
}

Vocab Vocab::build(const std::vector<std::string>& files, std::size_t max_size) {
  if (max_size < static_cast<std::size_t>(kNumReservedIds))
    throw ValueError("vocabulary size must be at least " + std::to_string(kNumReservedIds));
  std::map<std::string, std::size_t> counts;
  for (const auto& f : files)
    for (const auto& line : read_lines(f))
      for (auto& tok : split_tokens(line)) ++counts[tok];
  for (const char* r : kReserved) counts.erase(r);
  if (counts.empty()) throw ValueError("cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  ranked.resize(std::min(ranked.size(), max_size - kNumReservedIds));
  Vocab v;
  for (const auto& [tok, n] : ranked) v.add(tok);
  return v;
}

Vocab Vocab::load(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.size() < static_cast<std::size_t>(kNumReservedIds))
    throw IoError("vocabulary file '" + path + "' is missing the reserved tokens");
  for (int i = 0; i < kNumReservedIds; ++i)
    if (lines[i] != kReserved[i]) throw IoError("vocabulary file '" + path + "' has unexpected reserved tokens");
  return from_tokens({lines.begin() + kNumReservedIds, lines.end()});
}

void Vocab::save(const std::string& path) const { write_lines(path, tokens_); }

std::int32_t Vocab::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw ValueError("token id " + std::to_string(id) + " outside the vocabulary");
  return tokens_[id];
}

TokenSeq Vocab::encode(const std::string& line) const {
  TokenSeq out;
  for (const auto& tok : split_tokens(line)) out.push_back(id(tok));
  return out;
}

std::string Vocab::decode(const TokenSeq& ids) const {
  std::string out;
  for (std::int32_t id : ids) {
    if (id == kEosId) break;
    if (id == kPadId || id == kBosId) continue;
    if (!out.empty()) out += ' ';
    out += token(id);
  }
  return out;
}

}  // namespace hnmt
