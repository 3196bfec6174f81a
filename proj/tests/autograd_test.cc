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

#include <functional>
#include <memory>

#include "autograd/grad_check.h"
#include "autograd/tape.h"
#include "common/errors.h"
#include "test_util.h"

using namespace hnmt;
using hnmt::testutil::random_tensor;

TEST(Forward, TanhOfZeroTimesX) {
  Rng rng(1);
  Tape<float> tape;
  NodeId x = tape.input(random_tensor<float>(rng, 2, 3));
  NodeId y = tape.tanh(tape.scale(x, 0.0f));
  for (float v : tape.value(y).values()) EXPECT_EQ(v, 0.0f);
}

TEST(Forward, SingleMatmulEqualsKernel) {
  Rng rng(2);
  auto a = random_tensor<float>(rng, 3, 4), b = random_tensor<float>(rng, 4, 5);
  Tape<float> tape;
  NodeId y = tape.matmul(tape.input(a), tape.input(b));
  EXPECT_EQ(tape.value(y), matmul(a, b));
}

TEST(Forward, TwoLayerCompositionEqualsManualChain) {
  Rng rng(3);
  auto x = random_tensor<double>(rng, 4, 3), w1 = random_tensor<double>(rng, 3, 5),
       w2 = random_tensor<double>(rng, 5, 2), b1 = random_tensor<double>(rng, 1, 5);
  Tape<double> tape;
  NodeId h = tape.tanh(tape.add_row_bias(tape.matmul(tape.input(x), tape.parameter("w1", w1)),
                                         tape.parameter("b1", b1)));
  NodeId y = tape.sigmoid(tape.matmul(h, tape.parameter("w2", w2)));
  auto manual = sigmoid(matmul(tanh(add_row_bias(matmul(x, w1), b1)), w2));
  EXPECT_EQ(tape.value(y), manual);
}

TEST(Forward, PlaceholderReplays) {
  Tape<double> tape;
  NodeId x = tape.placeholder({1, 2});
  NodeId y = tape.sum(tape.mul(x, x));
  EXPECT_THROW(tape.forward(), ValueError);
  tape.bind(x, Tensor<double>::from_rows({{3, 4}}));
  tape.forward();
  EXPECT_DOUBLE_EQ(tape.value(y)[0], 25.0);
  tape.bind(x, Tensor<double>::from_rows({{1, 2}}));
  tape.forward();
  EXPECT_DOUBLE_EQ(tape.value(y)[0], 5.0);
}

TEST(Backward, SumGivesOnes) {
  Rng rng(4);
  Tape<float> tape;
  NodeId w = tape.parameter("w", random_tensor<float>(rng, 3, 4));
  tape.backward(tape.sum(w));
  auto g = tape.grad(w);
  for (float v : g.values()) EXPECT_EQ(v, 1.0f);
}

TEST(Backward, HalfSquaredNormGivesW) {
  Rng rng(5);
  auto w0 = random_tensor<double>(rng, 2, 5);
  Tape<double> tape;
  NodeId w = tape.parameter("w", w0);
  tape.backward(tape.scale(tape.sum(tape.mul(w, w)), 0.5));
  EXPECT_EQ(tape.grad(w), w0);
}

TEST(Backward, NonScalarLossRejected) {
  Tape<float> tape;
  NodeId w = tape.parameter("w", Tensor<float>({2, 2}));
  EXPECT_THROW(tape.backward(w), DimensionError);
}

TEST(Backward, UnusedParameterHasZeroGradient) {
  Tape<double> tape;
  NodeId used = tape.parameter("used", Tensor<double>::from_rows({{1, 2}}));
  NodeId unused = tape.parameter("unused", Tensor<double>::from_rows({{3, 4}}));
  tape.backward(tape.sum(tape.tanh(used)));
  auto g = tape.grad(unused);
  for (double v : g.values()) EXPECT_EQ(v, 0.0);
  auto grads = tape.parameter_grads();
  EXPECT_EQ(grads.names(), (std::vector<std::string>{"used", "unused"}));
}

TEST(Backward, ReusedParameterAccumulates) {
  Tape<double> tape;
  NodeId w = tape.parameter("w", Tensor<double>::from_rows({{2}}));
  NodeId y = tape.add(tape.mul(w, w), tape.mul(w, w));
  tape.backward(tape.sum(y));
  EXPECT_DOUBLE_EQ(tape.grad(w)[0], 8.0);
}

TEST(Backward, RepeatedRunsAreBitIdentical) {
  Rng rng(6);
  Tape<float> tape;
  NodeId w = tape.parameter("w", random_tensor<float>(rng, 4, 4));
  NodeId x = tape.input(random_tensor<float>(rng, 3, 4));
  NodeId loss = tape.sum(tape.softmax_rows(tape.tanh(tape.matmul(x, w))));
  tape.backward(loss);
  auto g1 = tape.parameter_grads();
  tape.forward();
  tape.backward(loss);
  EXPECT_EQ(g1, tape.parameter_grads());
}

TEST(GradCheck, QuadraticIsExact) {
  Rng rng(7);
  Tape<double> tape;
  NodeId w = tape.parameter("w", random_tensor<double>(rng, 3, 3));
  NodeId a = tape.input(random_tensor<double>(rng, 3, 3));
  NodeId loss = tape.sum(tape.mul(tape.matmul(a, w), w));
  EXPECT_LT(grad_check(tape, loss, 1e-5).max_rel_err, 1e-9);
}

TEST(GradCheck, NoParametersReportsZero) {
  Tape<double> tape;
  NodeId x = tape.input(Tensor<double>::from_rows({{1, 2}}));
  EXPECT_EQ(grad_check(tape, tape.sum(x), 1e-5).max_rel_err, 0.0);
}

TEST(GradCheck, RandomThreeOpGraph) {
  Rng rng(8);
  Tape<double> tape;
  NodeId w = tape.parameter("w", random_tensor<double>(rng, 4, 3));
  NodeId b = tape.parameter("b", random_tensor<double>(rng, 1, 3));
  NodeId x = tape.input(random_tensor<double>(rng, 2, 4));
  NodeId loss = tape.sum(tape.tanh(tape.add_row_bias(tape.matmul(x, w), b)));
  EXPECT_LT(grad_check(tape, loss, 1e-5).max_rel_err, 1e-6);
}

TEST(GradCheck, RestoresParameters) {
  Rng rng(9);
  auto w0 = random_tensor<double>(rng, 2, 2);
  Tape<double> tape;
  NodeId w = tape.parameter("w", w0);
  NodeId loss = tape.sum(tape.sigmoid(w));
  double before = tape.value(loss)[0];
  grad_check(tape, loss, 1e-5);
  EXPECT_EQ(tape.value(w), w0);
  EXPECT_EQ(tape.value(loss)[0], before);
}

// Every primitive against central differences at 64-bit precision.
namespace {

using Builder = std::function<NodeId(Tape<double>&, Rng&)>;

double check_primitive(const Builder& build, std::uint64_t seed) {
  Rng rng(seed);
  Tape<double> tape;
  NodeId out = build(tape, rng);
  // Weight the output so every element's adjoint differs.
  const auto& shape = tape.value(out).shape();
  NodeId weights = tape.input(random_tensor<double>(rng, shape[0], shape[1]));
  NodeId loss = tape.sum(tape.mul(out, weights));
  return grad_check(tape, loss, 1e-6).max_rel_err;
}

NodeId param(Tape<double>& t, Rng& rng, const char* name, std::size_t r, std::size_t c) {
  return t.parameter(name, random_tensor<double>(rng, r, c));
}

}  // namespace

TEST(GradCheck, EveryPrimitive) {
  std::vector<std::pair<const char*, Builder>> cases = {
      {"matmul", [](auto& t, auto& r) { return t.matmul(param(t, r, "a", 3, 4), param(t, r, "b", 4, 2)); }},
      {"matmul_nt", [](auto& t, auto& r) { return t.matmul_nt(param(t, r, "a", 3, 4), param(t, r, "b", 2, 4)); }},
      {"add", [](auto& t, auto& r) { return t.add(param(t, r, "a", 2, 3), param(t, r, "b", 2, 3)); }},
      {"sub", [](auto& t, auto& r) { return t.sub(param(t, r, "a", 2, 3), param(t, r, "b", 2, 3)); }},
      {"mul", [](auto& t, auto& r) { return t.mul(param(t, r, "a", 2, 3), param(t, r, "b", 2, 3)); }},
      {"scale", [](auto& t, auto& r) { return t.scale(param(t, r, "a", 2, 3), -1.7); }},
      {"add_row_bias", [](auto& t, auto& r) { return t.add_row_bias(param(t, r, "a", 3, 2), param(t, r, "b", 1, 2)); }},
      {"tanh", [](auto& t, auto& r) { return t.tanh(param(t, r, "a", 2, 3)); }},
      {"sigmoid", [](auto& t, auto& r) { return t.sigmoid(param(t, r, "a", 2, 3)); }},
      {"concat", [](auto& t, auto& r) { return t.concat({param(t, r, "a", 2, 3), param(t, r, "b", 2, 1)}, 1); }},
      {"concat_rows", [](auto& t, auto& r) { return t.concat({param(t, r, "a", 2, 3), param(t, r, "b", 1, 3)}, 0); }},
      {"slice_cols", [](auto& t, auto& r) { return t.slice_cols(param(t, r, "a", 2, 5), 1, 4); }},
      {"stack_rows",
       [](auto& t, auto& r) {
         NodeId ins[] = {param(t, r, "a", 2, 3), param(t, r, "b", 3, 3)};
         return t.stack_rows(ins, {{1, 2}, {0, 0}, {1, 2}, {0, 1}});
       }},
      {"embedding", [](auto& t, auto& r) { return t.embedding(param(t, r, "e", 5, 3), {4, 0, 4, 2}); }},
      {"softmax_rows", [](auto& t, auto& r) { return t.softmax_rows(param(t, r, "a", 3, 4)); }},
      {"softmax_masked",
       [](auto& t, auto& r) {
         auto mask = std::make_shared<Mask>(Mask::from_rows({{1, 0, 1}, {0, 1, 1}}));
         return t.softmax_rows(param(t, r, "a", 2, 3), mask);
       }},
      {"cross_entropy",
       [](auto& t, auto& r) { return t.cross_entropy_sum(param(t, r, "a", 3, 5), {0, 4, 2}, {1.0, 0.5, 0.0}); }},
      {"sum", [](auto& t, auto& r) { return t.sum(param(t, r, "a", 3, 2)); }},
      {"select_rows",
       [](auto& t, auto& r) { return t.select_rows({1, 0, 1}, param(t, r, "a", 3, 2), param(t, r, "b", 3, 2)); }},
  };
  std::uint64_t seed = 100;
  for (const auto& [name, build] : cases) {
    EXPECT_LT(check_primitive(build, seed++), 1e-6) << name;
  }
}

TEST(Tape, PartialSweepsCompose) {
  Rng rng(12);
  Tape<double> tape;
  NodeId w = tape.parameter("w", random_tensor<double>(rng, 3, 3));
  NodeId x = tape.input(random_tensor<double>(rng, 2, 3));
  NodeId h = tape.tanh(tape.matmul(x, w));
  const std::size_t mid = tape.size();
  NodeId loss = tape.sum(tape.matmul(h, w));
  tape.backward(loss);
  auto full = tape.grad(w);

  tape.zero_grads();
  tape.seed(loss, Tensor<double>::from_rows({{1}}));
  tape.backward_range(mid, tape.size());
  tape.backward_range(0, mid);
  EXPECT_EQ(tape.grad(w), full);
}

TEST(Tape, NonFiniteValueRaises) {
  Tape<double> tape;
  NodeId x = tape.input(Tensor<double>::from_rows({{1e308}}));
  EXPECT_THROW(tape.scale(x, 10.0), NumericError);
}
