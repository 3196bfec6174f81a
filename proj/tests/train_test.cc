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
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "common/errors.h"
#include "model/seq2seq.h"
#include "train/optimizer.h"
#include "train/trainer.h"

using namespace hnmt;

namespace {

NamedTensors<double> one_tensor(std::vector<double> values) {
  NamedTensors<double> t;
  const std::size_t n = values.size();
  t.add("w", Tensor<double>({1, n}, std::move(values)));
  return t;
}

ModelConfig tiny_config(FeedVariant variant = FeedVariant::kNoInputFeeding) {
  ModelConfig c;
  c.vocab_size = 12;
  c.embed_size = 6;
  c.hidden_size = 8;
  c.depth = 2;
  c.variant = variant;
  c.dropout = 0.2;
  return c;
}

ParallelCorpus random_corpus(std::size_t n, int vocab, std::size_t max_len, std::uint64_t seed) {
  Rng rng(seed);
  ParallelCorpus c;
  for (std::size_t i = 0; i < n; ++i) {
    TokenSeq s, t;
    const std::size_t ls = 1 + rng.below(max_len), lt = 1 + rng.below(max_len);
    for (std::size_t k = 0; k < ls; ++k) s.push_back(4 + static_cast<std::int32_t>(rng.below(vocab - 4)));
    for (std::size_t k = 0; k < lt; ++k) t.push_back(4 + static_cast<std::int32_t>(rng.below(vocab - 4)));
    c.src.push_back(s);
    c.tgt.push_back(t);
  }
  return c;
}

}  // namespace

TEST(Adam, FirstStepMovesByLearningRate) {
  auto params = one_tensor({0.5, -1.0, 2.0});
  const auto grads = one_tensor({3.0, -0.25, 1e-3});
  auto state = OptimizerState<double>::init(params, {0.01, 0.9, 0.999, 1e-8});
  adam_step(params, grads, state);
  EXPECT_EQ(state.t, 1);
  const double expected[] = {0.5 - 0.01, -1.0 + 0.01, 2.0 - 0.01};
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(params.at("w")[i], expected[i], 1e-6);
}

TEST(Adam, ZeroGradientLeavesParametersButCountsTheStep) {
  auto params = one_tensor({0.5, -1.0});
  const auto before = params;
  auto state = OptimizerState<double>::init(params);
  adam_step(params, one_tensor({0.0, 0.0}), state);
  adam_step(params, one_tensor({0.0, 0.0}), state);
  EXPECT_EQ(params, before);
  EXPECT_EQ(state.t, 2);
}

TEST(Adam, MatchesScalarOracleOnQuadratic) {
  // loss = 0.5 * a * (p - c)^2 per coordinate.
  const double a[] = {1.0, 4.0}, c[] = {2.0, -1.0};
  auto params = one_tensor({0.0, 0.5});
  auto state = OptimizerState<double>::init(params, {0.1, 0.9, 0.999, 1e-8});
  double p[] = {0.0, 0.5}, m[] = {0, 0}, v[] = {0, 0};
  for (int step = 1; step <= 3; ++step) {
    std::vector<double> g(2);
    for (int i = 0; i < 2; ++i) g[i] = a[i] * (params.at("w")[i] - c[i]);
    adam_step(params, one_tensor(g), state);
    for (int i = 0; i < 2; ++i) {
      const double gi = a[i] * (p[i] - c[i]);
      m[i] = 0.9 * m[i] + 0.1 * gi;
      v[i] = 0.999 * v[i] + 0.001 * gi * gi;
      const double mhat = m[i] / (1 - std::pow(0.9, step)), vhat = v[i] / (1 - std::pow(0.999, step));
      p[i] -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
    }
  }
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(params.at("w")[i], p[i], 1e-12);
}

TEST(Adam, RejectsMismatchedGradients) {
  auto params = one_tensor({1.0, 2.0});
  auto state = OptimizerState<double>::init(params);
  NamedTensors<double> other;
  other.add("u", Tensor<double>({1, 2}));
  EXPECT_THROW(adam_step(params, other, state), ValueError);
  EXPECT_THROW(adam_step(params, one_tensor({1.0, 2.0, 3.0}), state), DimensionError);
  EXPECT_EQ(state.t, 0);
  EXPECT_EQ(params, one_tensor({1.0, 2.0}));
}

TEST(ClipGradNorm, BoundsTheGlobalNorm) {
  GradientSet<double> g = one_tensor({3.0, 4.0});
  g.add("b", Tensor<double>({1, 1}, {12.0}));
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 6.5), 13.0);
  EXPECT_NEAR(global_norm(g), 6.5, 1e-12);
  EXPECT_NEAR(g.at("w")[0] / g.at("w")[1], 0.75, 1e-12);
  const auto before = g;
  clip_grad_norm(g, 100.0);
  EXPECT_EQ(g, before);
  EXPECT_THROW(clip_grad_norm(g, 0.0), ValueError);
}

TEST(LrDecay, FollowsTheDevPerplexityRule) {
  TrainState s;
  double lr = 0.001;
  EXPECT_FALSE(maybe_decay_lr(s, lr, 10.0));
  EXPECT_EQ(lr, 0.001);
  EXPECT_FALSE(maybe_decay_lr(s, lr, 9.5));
  EXPECT_EQ(lr, 0.001);
  EXPECT_TRUE(maybe_decay_lr(s, lr, 10.5));
  EXPECT_NEAR(lr, 0.0007, 1e-15);
  EXPECT_EQ(s.dev_ppl_history, (std::vector<double>{10.0, 9.5, 10.5}));

  TrainState t;
  t.dev_ppl_history = {10.0};
  lr = 0.001;
  EXPECT_TRUE(maybe_decay_lr(t, lr, 10.5));
  EXPECT_NEAR(lr, 0.0007, 1e-15);
}

TEST(Perplexity, UniformModelGivesVocabularySize) {
  const auto params = ModelParams<double>::zeros(tiny_config());
  EXPECT_NEAR(perplexity(params, random_corpus(7, 12, 5, 3), 3), 12.0, 1e-9);
}

TEST(Perplexity, CertainModelGivesOne) {
  // Every target is empty, so the only prediction is EOS.
  auto params = ModelParams<double>::zeros(tiny_config());
  params.tensors.at("output.bias")[kEosId] = 1000.0;
  ParallelCorpus corpus = random_corpus(5, 12, 4, 4);
  for (auto& t : corpus.tgt) t.clear();
  EXPECT_NEAR(perplexity(params, corpus), 1.0, 1e-12);
  EXPECT_THROW(perplexity(params, ParallelCorpus{}), ValueError);
}

TEST(Perplexity, IsExpOfBatchLoss) {
  const auto params = ModelParams<double>::init(tiny_config(), 5);
  const ParallelCorpus corpus = random_corpus(6, 12, 6, 5);
  const auto ref = loss_and_grads(params, corpus.sequential_batches(100)[0]);
  EXPECT_NEAR(perplexity(params, corpus), std::exp(ref.loss), 1e-9);
}

TEST(MakeBatches, CoversCorpusOnceAndBucketsByLength) {
  const ParallelCorpus corpus = random_corpus(103, 12, 13, 6);
  Rng rng(1);
  const auto batches = make_batches(corpus, 10, rng, 4);
  std::multiset<std::uint64_t> seen;
  std::size_t mixed = 0;
  for (const auto& b : batches) {
    EXPECT_GE(b.size(), 4u);
    std::set<std::size_t> buckets;
    for (std::size_t i = 0; i < b.size(); ++i) {
      seen.insert(b.ids[i]);
      EXPECT_EQ(b.src[i], corpus.src[b.ids[i]]);
      buckets.insert((b.src[i].size() - 1) / 4);
    }
    if (buckets.size() > 1) ++mixed;
  }
  EXPECT_EQ(seen.size(), 103u);
  EXPECT_EQ(std::set<std::uint64_t>(seen.begin(), seen.end()).size(), 103u);
  // Only a batch straddling two buckets may mix lengths.
  EXPECT_LE(mixed, 3u);

  Rng again(1);
  const auto repeat = make_batches(corpus, 10, again, 4);
  ASSERT_EQ(repeat.size(), batches.size());
  for (std::size_t i = 0; i < batches.size(); ++i) EXPECT_EQ(repeat[i].ids, batches[i].ids);
}

TEST(Train, DeterministicMetrics) {
  const ParallelCorpus train_set = random_corpus(24, 12, 5, 7), dev = random_corpus(5, 12, 5, 8);
  TrainOptions o;
  o.batch_size = 6;
  o.epochs = 2;
  o.eval_interval = 3;
  std::ostringstream first_stream;
  o.metrics = &first_stream;
  const auto first = train<float>(tiny_config(), o, train_set, dev);
  o.metrics = nullptr;
  const auto second = train<float>(tiny_config(), o, train_set, dev);
  ASSERT_EQ(first.records.size(), 3u);
  ASSERT_EQ(first.records.size(), second.records.size());
  for (std::size_t i = 0; i < first.records.size(); ++i) {
    EXPECT_EQ(first.records[i].batches, second.records[i].batches);
    EXPECT_EQ(first.records[i].loss, second.records[i].loss);
    EXPECT_EQ(first.records[i].dev_ppl, second.records[i].dev_ppl);
    EXPECT_EQ(first.records[i].lr, second.records[i].lr);
    EXPECT_EQ(first.records[i].scaling_factor, 1.0);
  }
  EXPECT_EQ(first.params.tensors, second.params.tensors);
  EXPECT_EQ(first.state.batches_seen, 8);

  std::istringstream lines(first_stream.str());
  int n = 0;
  for (std::string line; std::getline(lines, line); ++n) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("dev_ppl") && j.contains("src_tokens_per_sec") && j.contains("lr"));
  }
  EXPECT_EQ(n, 3);
}

TEST(Train, HybridFollowsSerialLossSequence) {
  const ParallelCorpus train_set = random_corpus(20, 12, 6, 9);
  TrainOptions o;
  o.batch_size = 5;
  o.epochs = 2;
  const auto serial = train<float>(tiny_config(), o, train_set, {});
  o.strategy = Strategy::kHybrid;
  o.n_devices = 4;
  const auto hybrid = train<float>(tiny_config(), o, train_set, {});
  ASSERT_EQ(serial.step_losses.size(), hybrid.step_losses.size());
  for (std::size_t i = 0; i < serial.step_losses.size(); ++i)
    EXPECT_NEAR(hybrid.step_losses[i], serial.step_losses[i], 1e-4 * std::abs(serial.step_losses[i])) << i;
  EXPECT_TRUE(std::isnan(hybrid.records.back().scaling_factor));
}

TEST(Train, InjectedRegressionDecaysLearningRate) {
  const ParallelCorpus train_set = random_corpus(20, 12, 5, 10), dev = random_corpus(4, 12, 5, 11);
  TrainOptions o;
  o.batch_size = 4;
  o.epochs = 2;
  o.eval_interval = 2;
  const double injected[] = {9.0, 8.0, 8.5, 7.0, 7.5};
  o.dev_ppl_hook = [&](std::int64_t batches, double) { return injected[batches / 2 - 1]; };
  const auto r = train<float>(tiny_config(), o, train_set, dev);
  ASSERT_EQ(r.records.size(), 5u);
  const bool decayed[] = {false, false, true, false, true};
  double lr = o.adam.lr;
  for (int i = 0; i < 5; ++i) {
    if (decayed[i]) lr *= 0.7;
    EXPECT_EQ(r.records[i].lr_decayed, decayed[i]) << i;
    EXPECT_NEAR(r.records[i].lr, lr, 1e-15) << i;
  }
  EXPECT_EQ(r.state.dev_ppl_history, (std::vector<double>{9.0, 8.0, 8.5, 7.0, 7.5}));
}

TEST(Train, DivergenceIsReported) {
  const ParallelCorpus train_set = random_corpus(12, 12, 5, 12);
  TrainOptions o;
  o.batch_size = 4;
  o.epochs = 5;
  o.adam.lr = 1e30;
  EXPECT_THROW(train<float>(tiny_config(), o, train_set, {}), NumericError);
}

TEST(Train, UsesThePlanVariant) {
  const ParallelCorpus train_set = random_corpus(8, 12, 4, 13);
  TrainOptions o;
  o.batch_size = 4;
  o.epochs = 1;
  o.strategy = Strategy::kHybridIF;
  o.n_devices = 4;
  const auto r = train<float>(tiny_config(FeedVariant::kNoInputFeeding), o, train_set, {});
  EXPECT_EQ(r.params.config.variant, FeedVariant::kInputFeeding);
}
