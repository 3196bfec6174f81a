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

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "common/errors.h"
#include "decode/bleu.h"
#include "decode/search.h"
#include "tensor/rng.h"

using namespace hnmt;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::int32_t kA = 4, kB = 5;
const std::int32_t kLive[] = {kEosId, kA, kB};

// Three emittable tokens (EOS, A, B) whose probabilities depend on the
// prefix through `probs`; the state is the prefix fed so far.
struct PrefixScorer {
  std::function<std::vector<double>(const TokenSeq&)> probs;  // over {EOS, A, B}

  TokenSeq initial() const { return {}; }
  std::vector<double> step(TokenSeq& prefix, std::int32_t token) const {
    if (token != kBosId) prefix.push_back(token);
    const auto p = probs(prefix);
    std::vector<double> lp(6, kNegInf);
    for (int i = 0; i < 3; ++i) lp[kLive[i]] = std::log(p[i]);
    return lp;
  }
};

PrefixScorer random_scorer(std::uint64_t seed) {
  return {[seed](const TokenSeq& prefix) {
    std::uint64_t key = 17;
    for (auto t : prefix) key = mix64(key * 31 + static_cast<std::uint64_t>(t));
    std::vector<double> w(3);
    double sum = 0;
    for (int i = 0; i < 3; ++i) sum += w[i] = 0.05 + keyed_uniform(seed, key, i, 0, 0);
    for (auto& x : w) x /= sum;
    return w;
  }};
}

// Best hypothesis over every sequence of at most max_len tokens.
Hypothesis exhaustive_best(const PrefixScorer& scorer, std::size_t max_len, double penalty) {
  Hypothesis best;
  bool have = false;
  std::function<void(TokenSeq, double)> walk = [&](TokenSeq prefix, double lp) {
    const auto p = scorer.probs(prefix);
    for (int i = 0; i < 3; ++i) {
      TokenSeq seq = prefix;
      seq.push_back(kLive[i]);
      const double total = lp + std::log(p[i]);
      if (kLive[i] == kEosId || seq.size() == max_len) {
        const double score = total / std::pow(static_cast<double>(seq.size()), penalty);
        if (!have || score > best.normalized_score || (score == best.normalized_score && seq < best.tokens)) {
          best = {seq, total, true, score};
          have = true;
        }
      } else {
        walk(seq, total);
      }
    }
  };
  walk({}, 0.0);
  return best;
}

ModelConfig toy_config(FeedVariant v) {
  ModelConfig c;
  c.vocab_size = 12;
  c.embed_size = 6;
  c.hidden_size = 8;
  c.depth = 2;
  c.variant = v;
  return c;
}

TokenSeq random_source(Rng& rng) {
  TokenSeq s(1 + rng.below(6));
  for (auto& t : s) t = 4 + static_cast<std::int32_t>(rng.below(8));
  return s;
}

// Independent BLEU: n-grams as joined strings.
double oracle_bleu(const std::vector<std::vector<std::string>>& hyps,
                   const std::vector<std::vector<std::string>>& refs) {
  double log_p = 0;
  std::size_t c = 0, r = 0;
  for (std::size_t i = 0; i < hyps.size(); ++i) c += hyps[i].size(), r += refs[i].size();
  for (int n = 1; n <= 4; ++n) {
    double match = 0, total = 0;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
      std::map<std::string, int> h, rf;
      auto count = [n](const std::vector<std::string>& s, std::map<std::string, int>& m) {
        for (int k = 0; k + n <= static_cast<int>(s.size()); ++k) {
          std::string g;
          for (int j = 0; j < n; ++j) g += s[k + j] + "\x1f";
          ++m[g];
        }
      };
      count(hyps[i], h);
      count(refs[i], rf);
      for (auto& [g, k] : h) {
        total += k;
        match += std::min(k, rf.count(g) ? rf[g] : 0);
      }
    }
    log_p += std::log(match / total) / 4;
  }
  const double bp = c < r ? std::exp(1.0 - double(r) / double(c)) : 1.0;
  return 100.0 * bp * std::exp(log_p);
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

}  // namespace

TEST(BeamSearch, HandModelPrefersLongerOutputOnlyWithLengthPenalty) {
  // EOS right away is likelier than any single continuation, but A A B EOS
  // has the best per-token score.
  const PrefixScorer scorer{[](const TokenSeq& p) -> std::vector<double> {
    if (p.empty()) return {0.45, 0.35, 0.20};
    if (p == TokenSeq{kA}) return {0.05, 0.9, 0.05};
    if (p == TokenSeq{kA, kA}) return {0.05, 0.05, 0.9};
    if (p == TokenSeq{kA, kA, kB}) return {0.9, 0.05, 0.05};
    return {0.4, 0.3, 0.3};
  }};
  const Hypothesis short_best = exhaustive_best(scorer, 4, 0.0);
  const Hypothesis long_best = exhaustive_best(scorer, 4, 1.0);
  EXPECT_EQ(short_best.tokens, TokenSeq{kEosId});
  EXPECT_EQ(long_best.tokens, (TokenSeq{kA, kA, kB, kEosId}));

  for (double penalty : {0.0, 1.0}) {
    const Hypothesis oracle = exhaustive_best(scorer, 4, penalty);
    const Hypothesis beam = beam_search(scorer, {100, penalty, 4});
    EXPECT_EQ(beam.tokens, oracle.tokens) << penalty;
    EXPECT_NEAR(beam.normalized_score, oracle.normalized_score, 1e-12);
    EXPECT_TRUE(beam.finished);
  }
  // A beam of one commits to EOS first.
  EXPECT_EQ(beam_search(scorer, {1, 1.0, 4}).tokens, TokenSeq{kEosId});
}

TEST(BeamSearch, WideBeamMatchesExhaustiveEnumeration) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const PrefixScorer scorer = random_scorer(seed);
    for (double penalty : {0.0, 0.5, 1.0}) {
      const Hypothesis oracle = exhaustive_best(scorer, 4, penalty);
      const Hypothesis beam = beam_search(scorer, {81, penalty, 4});
      EXPECT_EQ(beam.tokens, oracle.tokens) << seed << " " << penalty;
      EXPECT_NEAR(beam.log_prob, oracle.log_prob, 1e-12);
    }
  }
}

TEST(BeamSearch, ZeroPenaltyRanksByLogProb) {
  const Hypothesis h = beam_search(random_scorer(3), {4, 0.0, 5});
  EXPECT_EQ(h.normalized_score, h.log_prob);
  EXPECT_THROW(beam_search(random_scorer(3), {0, 0.0, 5}), ValueError);
  EXPECT_THROW(beam_search(random_scorer(3), {2, 0.0, 0}), ValueError);
}

TEST(BeamSearch, ExhaustiveWidthDominatesNarrowerBeams) {
  // Pruning makes a wider beam occasionally lose to a narrower one (seed 110,
  // b = 3 vs 4 at p = 1), but a beam wide enough to keep every prefix is exact.
  for (std::uint64_t seed = 100; seed < 160; ++seed) {
    const PrefixScorer scorer = random_scorer(seed);
    for (double penalty : {0.0, 1.0}) {
      const double exact = beam_search(scorer, {243, penalty, 6}).normalized_score;
      for (std::size_t b = 1; b <= 6; ++b)
        EXPECT_GE(exact, beam_search(scorer, {b, penalty, 6}).normalized_score) << seed << " " << b;
    }
  }
  const PrefixScorer scorer = random_scorer(110);
  EXPECT_LT(beam_search(scorer, {4, 1.0, 6}).normalized_score, beam_search(scorer, {3, 1.0, 6}).normalized_score);
}

TEST(GreedyDecode, OneHotModelAndMaxLen) {
  const TokenSeq target = {kB, kA, kA, kEosId};
  const PrefixScorer scorer{[&](const TokenSeq& p) -> std::vector<double> {
    const std::int32_t next = p.size() < target.size() ? target[p.size()] : kEosId;
    std::vector<double> w(3, 1e-9);
    for (int i = 0; i < 3; ++i)
      if (kLive[i] == next) w[i] = 1.0 - 2e-9;
    return w;
  }};
  EXPECT_EQ(greedy_decode(scorer, 10).tokens, target);
  const Hypothesis one = greedy_decode(scorer, 1);
  EXPECT_EQ(one.tokens, TokenSeq{kB});
  EXPECT_TRUE(one.finished);
  EXPECT_THROW(greedy_decode(scorer, 0), ValueError);
}

TEST(GreedyDecode, EqualsBeamOfOneOnModel) {
  Rng rng(21);
  for (auto variant : {FeedVariant::kInputFeeding, FeedVariant::kNoInputFeeding}) {
    const auto params = ModelParams<float>::init(toy_config(variant), 9, 1.0);
    for (int i = 0; i < 50; ++i) {
      const TokenSeq src = random_source(rng);
      const Hypothesis g = greedy_decode(params, src, 12);
      const Hypothesis b = beam_search(params, src, {1, 1.0, 12});
      EXPECT_EQ(g.tokens, b.tokens) << i;
      EXPECT_NEAR(g.log_prob, b.log_prob, 1e-9);
    }
  }
}

TEST(BeamSearch, LengthPenaltyFavoursLongerOutputs) {
  Rng rng(5);
  const auto params = ModelParams<double>::init(toy_config(FeedVariant::kNoInputFeeding), 4, 1.0);
  std::vector<TokenSeq> sources;
  for (int i = 0; i < 40; ++i) sources.push_back(random_source(rng));
  double previous = 0.0;
  for (double p : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    double total = 0;
    for (const auto& s : sources) total += static_cast<double>(beam_search(params, s, {5, p, 15}).tokens.size());
    EXPECT_GE(total, previous) << p;
    previous = total;
  }
}

TEST(Bleu, IdenticalIsHundredAndDisjointIsZero) {
  const std::vector<std::string> ref = {"the cat sat on the mat", "a b", "x"};
  EXPECT_EQ(corpus_bleu(ref, ref), 100.0);
  EXPECT_EQ(corpus_bleu({"q r s t u v", "y z", "w"}, ref), 0.0);
  EXPECT_THROW(corpus_bleu({"a"}, {"a", "b"}), ValueError);
  EXPECT_THROW(corpus_bleu({}, {}), ValueError);
}

TEST(Bleu, MatchesIndependentCounting) {
  const std::vector<std::string> hyp = {"the cat the cat sat on mat", "he read the book because it was good",
                                        "a quick brown dog jumps"};
  const std::vector<std::string> ref = {"the cat sat on the mat", "he read the book because he liked it",
                                        "the quick brown fox jumps over the lazy dog"};
  std::vector<std::vector<std::string>> h, r;
  for (auto& s : hyp) h.push_back(words(s));
  for (auto& s : ref) r.push_back(words(s));
  const BleuStats stats = corpus_bleu_stats(hyp, ref);
  EXPECT_NEAR(stats.score, oracle_bleu(h, r), 1e-9);
  EXPECT_GT(stats.score, 0.0);
  EXPECT_LT(stats.brevity_penalty, 1.0);
}

TEST(Bleu, PermutationInvariant) {
  const std::vector<std::string> hyp = {"a b c d e", "f g h", "i j k l m n", "o p"};
  const std::vector<std::string> ref = {"a b c x e", "f g h i", "i j k l m", "p o"};
  const double base = corpus_bleu(hyp, ref);
  const std::vector<std::string> hyp2 = {hyp[2], hyp[0], hyp[3], hyp[1]};
  const std::vector<std::string> ref2 = {ref[2], ref[0], ref[3], ref[1]};
  EXPECT_DOUBLE_EQ(corpus_bleu(hyp2, ref2), base);
}
