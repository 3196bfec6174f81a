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

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "common/errors.h"
#include "data/corpus.h"
#include "data/vocab.h"
#include "model/config.h"

using namespace hnmt;

namespace {

class TempDir {
 public:
  TempDir() : path_(std::filesystem::temp_directory_path() / ("hnmt_data_" + std::to_string(::getpid()))) {
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name, const std::vector<std::string>& lines) const {
    const std::string p = (path_ / name).string();
    write_lines(p, lines);
    return p;
  }
  std::string path(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace

TEST(Vocab, FrequencyThenLexicographic) {
  TempDir dir;
  const auto f = dir.file("c.txt", {"a a b"});
  const Vocab v = Vocab::build({f}, 6);
  EXPECT_EQ(v.size(), 6u);
  EXPECT_EQ(v.id("a"), 4);
  EXPECT_EQ(v.id("b"), 5);
  EXPECT_EQ(v.id("zzz"), kUnkId);

  const auto g = dir.file("d.txt", {"c b a", "b c"});
  const Vocab w = Vocab::build({g}, 6);
  EXPECT_EQ(w.token(4), "b");
  EXPECT_EQ(w.token(5), "c");
  EXPECT_EQ(w.id("a"), kUnkId);
}

TEST(Vocab, ReservedOnlyMapsEverythingToUnk) {
  TempDir dir;
  const Vocab v = Vocab::build({dir.file("c.txt", {"x y z"})}, 4);
  EXPECT_EQ(v.size(), 4u);
  EXPECT_EQ(v.encode("x y z"), (TokenSeq{kUnkId, kUnkId, kUnkId}));
  EXPECT_THROW(Vocab::build({dir.file("e.txt", {"", "  "})}, 10), ValueError);
  EXPECT_THROW(Vocab::build({dir.path("missing.txt")}, 10), IoError);
  EXPECT_THROW(Vocab::build({dir.file("f.txt", {"x"})}, 3), ValueError);
}

TEST(Vocab, RoundTrips) {
  TempDir dir;
  const Vocab v = Vocab::from_tokens({"the", "cat", "sat"});
  const TokenSeq ids = v.encode("the cat sat the");
  EXPECT_EQ(v.encode(v.decode(ids)), ids);
  EXPECT_EQ(v.decode({kBosId, 4, 5, kEosId, 6}), "the cat");
  v.save(dir.path("v.txt"));
  EXPECT_EQ(Vocab::load(dir.path("v.txt")), v);
  EXPECT_THROW(Vocab::from_tokens({"a", "a"}), ValueError);
  EXPECT_THROW(Vocab::from_tokens({"<unk>"}), ValueError);
  EXPECT_THROW(v.token(99), ValueError);
  EXPECT_THROW(Vocab::load(dir.file("bad.txt", {"a", "b", "c", "d"})), IoError);
}

TEST(Corpus, LoadsAlignedFiles) {
  TempDir dir;
  const Vocab v = Vocab::from_tokens({"a", "b"});
  const auto c = load_parallel(dir.file("s", {"a b", "b\r"}), dir.file("t", {"b", "a a"}), v);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.src[1], (TokenSeq{5}));
  EXPECT_EQ(c.tgt[1], (TokenSeq{4, 4}));
  const Batch b = c.batch({1, 0});
  EXPECT_EQ(b.ids, (std::vector<std::uint64_t>{1, 0}));
  EXPECT_EQ(c.sequential_batches(1).size(), 2u);
  EXPECT_THROW(load_parallel(dir.file("s2", {"a", "b"}), dir.file("t2", {"a"}), v), IoError);
  EXPECT_THROW(load_parallel(dir.file("s3", {""}), dir.file("t3", {"a"}), v), ValueError);
}

TEST(ToyCorpus, ReverseAndCopy) {
  const auto rev = gen_toy_corpus(ToyTask::kReverse, 50, 6, 9, 3);
  const auto copy = gen_toy_corpus(ToyTask::kCopy, 50, 6, 9, 3);
  ASSERT_EQ(rev.src.size(), 50u);
  EXPECT_EQ(copy.src, rev.src);
  EXPECT_EQ(copy.tgt, copy.src);
  for (std::size_t i = 0; i < rev.src.size(); ++i) {
    auto toks = split_tokens(rev.src[i]);
    EXPECT_GE(toks.size(), 1u);
    EXPECT_LE(toks.size(), 6u);
    for (const auto& t : toks) EXPECT_TRUE(t == "w0" || t == "w1" || t == "w2" || t == "w3" || t == "w4") << t;
    std::reverse(toks.begin(), toks.end());
    EXPECT_EQ(split_tokens(rev.tgt[i]), toks);
  }
  const auto again = gen_toy_corpus(ToyTask::kReverse, 50, 6, 9, 3);
  EXPECT_EQ(again.src, rev.src);
  EXPECT_NE(gen_toy_corpus(ToyTask::kReverse, 50, 6, 9, 4).src, rev.src);
  EXPECT_THROW(gen_toy_corpus(ToyTask::kCopy, 1, 3, 4, 1), ValueError);
  EXPECT_EQ(parse_toy_task("reverse"), ToyTask::kReverse);
  EXPECT_THROW(parse_toy_task("sort"), ConfigError);
}
