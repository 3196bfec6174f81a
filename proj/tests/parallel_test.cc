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

#include <algorithm>
#include <functional>
#include <set>

#include "common/errors.h"
#include "parallel/collectives.h"
#include "parallel/engine.h"
#include "parallel/mailbox.h"
#include "parallel/placement.h"
#include "parallel/schedule.h"
#include "test_util.h"

using namespace hnmt;

namespace {

ModelConfig small_config(FeedVariant variant, int depth = 4) {
  ModelConfig c;
  c.vocab_size = 20;
  c.embed_size = 6;
  c.hidden_size = 8;
  c.depth = depth;
  c.variant = variant;
  return c;
}

// Longest path (in tasks) through the schedule's DAG by enumerating every
// path from every task.
int brute_force_longest_path(const WavefrontSchedule& s) {
  std::vector<std::vector<std::size_t>> succ(s.tasks.size());
  for (std::size_t i = 0; i < s.tasks.size(); ++i)
    for (std::size_t d : s.tasks[i].deps) succ[d].push_back(i);
  int best = 0;
  std::function<void(std::size_t, int)> walk = [&](std::size_t v, int len) {
    best = std::max(best, len);
    for (std::size_t w : succ[v]) walk(w, len + 1);
  };
  for (std::size_t i = 0; i < s.tasks.size(); ++i)
    if (s.tasks[i].deps.empty()) walk(i, 1);
  return best;
}

Strategy all_strategies[] = {Strategy::kSerial, Strategy::kDataParallel, Strategy::kModelParallel,
                             Strategy::kHybrid, Strategy::kHybridIF};

int devices_for(Strategy s) { return s == Strategy::kSerial ? 1 : 4; }

}  // namespace

TEST(Placement, SerialPutsEverythingOnDeviceZero) {
  auto plan = build_placement(Strategy::kSerial, 1, small_config(FeedVariant::kInputFeeding));
  for (const auto& name : param_specs(small_config(FeedVariant::kInputFeeding)))
    EXPECT_EQ(plan.owners(name.name), std::vector<int>{0});
}

TEST(Placement, ModelParallelSplit) {
  auto plan = build_placement(Strategy::kModelParallel, 4, small_config(FeedVariant::kInputFeeding));
  EXPECT_EQ(plan.layer_device, (std::vector<int>{0, 0, 1, 2, 2}));
  EXPECT_EQ(plan.state_owner, 3);
  EXPECT_EQ(plan.attn_devices, std::vector<int>{3});
  EXPECT_EQ(plan.owners("src_embedding"), std::vector<int>{0});
  EXPECT_EQ(plan.owners("decoder.4.w_input"), std::vector<int>{2});
}

TEST(Placement, HybridForcesVariant) {
  auto cfg = small_config(FeedVariant::kInputFeeding);
  EXPECT_EQ(build_placement(Strategy::kHybrid, 4, cfg).variant, FeedVariant::kNoInputFeeding);
  cfg.variant = FeedVariant::kNoInputFeeding;
  EXPECT_EQ(build_placement(Strategy::kHybridIF, 4, cfg).variant, FeedVariant::kInputFeeding);
  EXPECT_EQ(build_placement(Strategy::kHybrid, 4, cfg).attn_devices, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Placement, UnsupportedCombinations) {
  auto cfg = small_config(FeedVariant::kNoInputFeeding);
  EXPECT_THROW(build_placement(Strategy::kSerial, 2, cfg), ConfigError);
  EXPECT_THROW(build_placement(Strategy::kModelParallel, 3, cfg), ConfigError);
  EXPECT_THROW(build_placement(Strategy::kHybrid, 8, cfg), ConfigError);
  EXPECT_THROW(build_placement(Strategy::kDataParallel, 0, cfg), ConfigError);
  EXPECT_THROW(build_placement(Strategy::kModelParallel, 4, cfg, {0, 1}), ConfigError);
  EXPECT_THROW(parse_strategy("pipeline"), ConfigError);
}

TEST(Placement, StrategyNamesRoundTrip) {
  for (Strategy s : all_strategies) EXPECT_EQ(parse_strategy(to_string(s)), s);
}

TEST(Wavefront, EncoderWaveCount) {
  for (int m = 1; m <= 6; ++m)
    for (int l = 1; l <= 4; ++l) {
      auto s = wavefront_order(m, 0, l, FeedVariant::kNoInputFeeding);
      EXPECT_EQ(s.wave_count(), m + l - 1) << m << "x" << l;
    }
}

TEST(Wavefront, SingleStepSingleLayer) {
  auto s = wavefront_order(1, 0, 1, FeedVariant::kNoInputFeeding);
  ASSERT_EQ(s.tasks.size(), 1u);
  EXPECT_EQ(s.wave_count(), 1);
}

TEST(Wavefront, TasksOfAWaveAreIndependent) {
  auto s = wavefront_order(4, 3, 3, FeedVariant::kInputFeeding);
  for (std::size_t i = 0; i < s.tasks.size(); ++i)
    for (std::size_t d : s.tasks[i].deps) EXPECT_LT(s.tasks[d].wave, s.tasks[i].wave);
  std::size_t n = 0;
  for (const auto& w : s.waves()) n += w.size();
  EXPECT_EQ(n, s.tasks.size());
}

TEST(Wavefront, NoFeedingContinuesTheDiagonal) {
  auto s = wavefront_order(3, 3, 2, FeedVariant::kNoInputFeeding);
  EXPECT_EQ(s.tasks[s.find(TaskSide::kDecoder, 0, 1)].wave, 4);
  EXPECT_EQ(s.tasks[s.find(TaskSide::kDecoder, 1, 1)].wave, 5);
  EXPECT_EQ(s.tasks[s.find(TaskSide::kDecoder, 0, 2)].wave, 5);
}

TEST(Wavefront, InputFeedingSerializesTheDecoder) {
  auto nf = wavefront_order(4, 3, 2, FeedVariant::kNoInputFeeding);
  auto f = wavefront_order(4, 3, 2, FeedVariant::kInputFeeding);
  EXPECT_EQ(f.decoder_wave_count(), 3 * (2 + 1));
  EXPECT_GE(f.decoder_wave_count(), nf.decoder_wave_count());
  for (int n = 2; n <= 4; ++n)
    for (int l = 2; l <= 4; ++l)
      EXPECT_GT(wavefront_order(3, n, l, FeedVariant::kInputFeeding).wave_count(),
                wavefront_order(3, n, l, FeedVariant::kNoInputFeeding).wave_count());
}

TEST(Wavefront, CriticalPathMatchesBruteForce) {
  for (auto v : {FeedVariant::kNoInputFeeding, FeedVariant::kInputFeeding}) {
    auto s = wavefront_order(5, 5, 4, v);
    EXPECT_EQ(s.wave_count(), brute_force_longest_path(s));
  }
  EXPECT_GT(wavefront_order(5, 5, 4, FeedVariant::kInputFeeding).wave_count(),
            wavefront_order(5, 5, 4, FeedVariant::kNoInputFeeding).wave_count());
}

TEST(Collectives, ScatterSizes) {
  Rng rng(1);
  auto batch = testutil::random_batch(rng, 9, 20, 4);
  auto shards = scatter_batch(batch, 4);
  std::vector<std::size_t> sizes;
  for (const auto& s : shards) sizes.push_back(s.size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{3, 2, 2, 2}));
  EXPECT_EQ(shards[1].ids.front(), 3u);
  EXPECT_THROW(scatter_batch(batch, 10), ValueError);
}

TEST(Collectives, ScatterFillsIds) {
  Batch b{{{4}, {5}}, {{6}, {7}}, {}};
  auto shards = scatter_batch(b, 2);
  EXPECT_EQ(shards[1].ids, std::vector<std::uint64_t>{1});
}

TEST(Collectives, AllreduceSumsInOrder) {
  GradientSet<double> a, b;
  a.add("w", Tensor<double>::from_rows({{1, 2}}));
  b.add("w", Tensor<double>::from_rows({{10, 20}}));
  std::vector<GradientSet<double>> sets{a, b};
  auto r = allreduce_grads<double>(sets);
  EXPECT_EQ(r.at("w"), Tensor<double>::from_rows({{11, 22}}));
}

TEST(Collectives, AllreduceRejectsMismatches) {
  GradientSet<double> a, b, c;
  a.add("w", Tensor<double>({1, 2}));
  b.add("v", Tensor<double>({1, 2}));
  c.add("w", Tensor<double>({2, 1}));
  std::vector<GradientSet<double>> names{a, b}, shapes{a, c};
  EXPECT_THROW(allreduce_grads<double>(names), ValueError);
  EXPECT_THROW(allreduce_grads<double>(shapes), DimensionError);
}

TEST(Collectives, FlattenRoundTrip) {
  GradientSet<float> a;
  a.add("x", Tensor<float>::from_rows({{1, 2}, {3, 4}}));
  a.add("y", Tensor<float>::from_rows({{5}}));
  GradientSet<float> b;
  b.add("x", Tensor<float>({2, 2}));
  b.add("y", Tensor<float>({1, 1}));
  unflatten(flatten(a), b);
  EXPECT_EQ(a, b);
}

class Strategies : public ::testing::TestWithParam<FeedVariant> {};

TEST_P(Strategies, SerialIsBitIdenticalToSingleTape) {
  auto cfg = small_config(GetParam(), 2);
  auto params = ModelParams<float>::init(cfg, 3);
  Rng rng(4);
  auto batch = testutil::random_batch(rng, 5, cfg.vocab_size, 5);
  DropoutSpec dropout{0.3, 9};
  auto direct = loss_and_grads(params, batch, dropout);
  auto plan = build_placement(Strategy::kSerial, 1, cfg);
  auto run = run_strategy(plan, params, batch, {dropout});
  EXPECT_EQ(run.loss, direct.loss);
  EXPECT_EQ(run.grads, direct.grads);
}

TEST_P(Strategies, AllStrategiesMatchSerial) {
  for (Strategy s : all_strategies) {
    auto cfg = small_config(GetParam());
    auto plan = build_placement(s, devices_for(s), cfg);
    cfg.variant = plan.variant;
    auto params = ModelParams<float>::init(cfg, 21, 0.5);
    Rng rng(8);
    auto batch = testutil::random_batch(rng, 9, cfg.vocab_size, 6, 100);
    DropoutSpec dropout{0.2, 5};
    auto serial = loss_and_grads(params, batch, dropout);
    auto run = run_strategy(plan, params, batch, {dropout});
    EXPECT_NEAR(run.loss, serial.loss, 1e-5 * std::abs(serial.loss)) << to_string(s);
    EXPECT_LT(testutil::max_rel_err(run.grads, serial.grads), 1e-5) << to_string(s);
    EXPECT_EQ(check_trace(run.trace, plan), std::vector<std::string>{}) << to_string(s);
  }
}

INSTANTIATE_TEST_SUITE_P(BothVariants, Strategies,
                         ::testing::Values(FeedVariant::kNoInputFeeding, FeedVariant::kInputFeeding));

TEST(Engine, DataParallelOnDoubledBatch) {
  auto cfg = small_config(FeedVariant::kNoInputFeeding, 2);
  auto params = ModelParams<double>::init(cfg, 2);
  Rng rng(3);
  auto half = testutil::random_batch(rng, 4, cfg.vocab_size, 5);
  Batch doubled = half;
  for (std::size_t b = 0; b < half.size(); ++b) {
    doubled.src.push_back(half.src[b]);
    doubled.tgt.push_back(half.tgt[b]);
    doubled.ids.push_back(half.ids[b]);
  }
  auto plan = build_placement(Strategy::kDataParallel, 2, cfg);
  auto run = run_strategy(plan, params, doubled);
  auto serial = loss_and_grads(params, half);
  // Both replicas see the same sentences, so the token mean is unchanged.
  EXPECT_NEAR(run.loss, serial.loss, 1e-12);
  EXPECT_LT(testutil::max_rel_err(run.grads, serial.grads), 1e-12);
}

TEST(Engine, ParameterIsolation) {
  auto cfg = small_config(FeedVariant::kNoInputFeeding);
  for (Strategy s : {Strategy::kModelParallel, Strategy::kHybrid}) {
    auto plan = build_placement(s, 4, cfg);
    auto params = ModelParams<float>::init(cfg, 1);
    Rng rng(2);
    auto run = run_strategy(plan, params, testutil::random_batch(rng, 6, cfg.vocab_size, 4));
    EXPECT_EQ(check_param_isolation(run.trace, plan), std::vector<std::string>{});
    for (const auto& name : run.trace.touched[1]) EXPECT_NE(part_of(name), ModelPart::kEmbedding) << name;
    for (const auto& name : run.trace.touched[2])
      EXPECT_TRUE(name.find(".3.") != std::string::npos || name.find(".4.") != std::string::npos ||
                  part_of(name) == ModelPart::kAttentionSoftmax)
          << name;
  }
}

TEST(Engine, HybridAttentionRunsOnSeveralDevices) {
  auto cfg = small_config(FeedVariant::kNoInputFeeding, 2);
  auto plan = build_placement(Strategy::kHybrid, 4, cfg);
  auto params = ModelParams<float>::init(cfg, 1);
  Rng rng(6);
  for (std::size_t n : {2u, 3u, 7u}) {
    auto run = run_strategy(plan, params, testutil::random_batch(rng, n, cfg.vocab_size, 4));
    std::set<int> devices;
    for (const auto& e : run.trace.events)
      if (e.kind == EventKind::kCompute && e.task.rfind("attn", 0) == 0) devices.insert(e.device);
    EXPECT_EQ(devices.size(), std::min<std::size_t>(n, 4));
  }
}

TEST(Engine, TraceCsvHasOneLinePerEvent) {
  auto cfg = small_config(FeedVariant::kInputFeeding, 2);
  auto plan = build_placement(Strategy::kModelParallel, 4, cfg);
  auto params = ModelParams<float>::init(cfg, 1);
  Rng rng(6);
  auto run = run_strategy(plan, params, testutil::random_batch(rng, 3, cfg.vocab_size, 3));
  const std::string csv = run.trace.to_csv();
  EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')), run.trace.events.size() + 1);
  EXPECT_EQ(csv.rfind("device,kind,task,start_ns,end_ns,bytes,peer\n", 0), 0u);
  EXPECT_GT(run.trace.bytes_sent(), 0u);
}

TEST(Engine, TraceChecksCatchViolations) {
  ExecTrace t;
  t.n_devices = 2;
  t.events = {{0, EventKind::kCompute, "a", 0, 10, 0, -1}, {0, EventKind::kCompute, "b", 5, 12, 0, -1},
              {1, EventKind::kRecv, "m", 0, 3, 4, 0}};
  t.tasks = {{"a", 0, {}}, {"b", 0, {0}}};
  EXPECT_FALSE(check_device_serial(t).empty());
  EXPECT_FALSE(check_messages(t).empty());
  EXPECT_FALSE(check_dependencies(t).empty());
}

TEST(Engine, RejectsVariantMismatchAndBadBatches) {
  auto cfg = small_config(FeedVariant::kInputFeeding, 2);
  auto plan = build_placement(Strategy::kHybrid, 4, cfg);
  auto params = ModelParams<float>::init(cfg, 1);
  Rng rng(1);
  auto batch = testutil::random_batch(rng, 4, cfg.vocab_size, 3);
  EXPECT_THROW(run_strategy(plan, params, batch), ConfigError);
  auto dp = build_placement(Strategy::kDataParallel, 4, cfg);
  EXPECT_THROW(run_strategy(dp, params, batch.slice(0, 2)), ValueError);
  batch.src[0][0] = 99;
  EXPECT_THROW(run_strategy(build_placement(Strategy::kSerial, 1, cfg), params, batch), ValueError);
}

TEST(Mailbox, DeliversAndTimesOut) {
  Mailbox<float> box;
  std::atomic<bool> abort{false};
  box.put("k", Tensor<float>::from_rows({{1}}));
  EXPECT_EQ(box.take("k", std::chrono::milliseconds(10), abort, 0)[0], 1.0f);
  EXPECT_THROW(box.take("k", std::chrono::milliseconds(10), abort, 0), SchedulingError);
  abort = true;
  EXPECT_THROW(box.take("other", std::chrono::milliseconds(10000), abort, 0), SchedulingError);
}
