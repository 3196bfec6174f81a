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
#include <limits>

#include "common/errors.h"
#include "tensor/rng.h"
#include "tensor/tensor.h"
#include "test_util.h"

using namespace hnmt;
using hnmt::testutil::random_tensor;

namespace {

template <typename T>
Tensor<T> triple_loop(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> out({a.rows(), b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += double(a(i, k)) * double(b(k, j));
      out(i, j) = static_cast<T>(acc);
    }
  return out;
}

}  // namespace

TEST(MatMul, Identity) {
  auto eye = Tensor<float>::from_rows({{1, 0}, {0, 1}});
  auto m = Tensor<float>::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(matmul(eye, m), m);
}

TEST(MatMul, ZeroColumn) {
  auto m = Tensor<float>::from_rows({{1, 2}, {3, 4}});
  auto z = Tensor<float>::from_rows({{0}, {0}});
  EXPECT_EQ(matmul(m, z), z);
}

TEST(MatMul, MatchesTripleLoop) {
  Rng rng(7);
  auto a = random_tensor<float>(rng, 3, 4);
  auto b = random_tensor<float>(rng, 4, 2);
  auto got = matmul(a, b);
  auto want = triple_loop(a, b);
  ASSERT_EQ(got.shape(), want.shape());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-6);
}

TEST(MatMul, RandomShapesAgreeWithOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t m = 1 + rng.below(8), k = 1 + rng.below(8), n = 1 + rng.below(8);
    auto a = random_tensor<float>(rng, m, k);
    auto b = random_tensor<float>(rng, k, n);
    EXPECT_LT(testutil::rel_err(matmul(a, b), triple_loop(a, b)), 1e-6);
  }
}

TEST(MatMul, TransposedVariants) {
  Rng rng(3);
  auto a = random_tensor<double>(rng, 3, 5);
  auto b = random_tensor<double>(rng, 4, 5);
  auto c = random_tensor<double>(rng, 3, 2);
  EXPECT_LT(testutil::rel_err(matmul_nt(a, b), triple_loop(a, transpose(b))), 1e-14);
  EXPECT_LT(testutil::rel_err(matmul_tn(a, c), triple_loop(transpose(a), c)), 1e-14);
}

TEST(MatMul, ShapeMismatchNamesBothShapes) {
  Tensor<float> a({2, 3}), b({2, 3});
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
  }
}

TEST(MatMul, Deterministic) {
  Rng rng(5);
  auto a = random_tensor<float>(rng, 6, 7);
  auto b = random_tensor<float>(rng, 7, 5);
  EXPECT_EQ(matmul(a, b), matmul(a, b));
}

TEST(Softmax, Symmetric) {
  auto p = softmax_rows(Tensor<double>::from_rows({{0, 0}}));
  EXPECT_DOUBLE_EQ(p[0], 0.5);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
}

TEST(Softmax, ClosedForm) {
  auto p = softmax_rows(Tensor<double>::from_rows({{std::log(2.0), 0}}));
  EXPECT_NEAR(p[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(p[1], 1.0 / 3.0, 1e-12);
}

TEST(Softmax, LargeLogitDoesNotOverflow) {
  auto p = softmax_rows(Tensor<float>::from_rows({{1000, 0}}));
  EXPECT_NEAR(p[0], 1.0, 1e-6);
  EXPECT_NEAR(p[1], 0.0, 1e-6);
}

TEST(Softmax, MaskedEntriesAreExactlyZero) {
  auto x = Tensor<float>::from_rows({{1, 2, 3}, {4, 5, 6}});
  Mask mask = Mask::from_rows({{1, 0, 1}, {0, 0, 1}});
  auto p = softmax_rows(x, &mask);
  EXPECT_EQ(p(0, 1), 0.0f);
  EXPECT_EQ(p(1, 0), 0.0f);
  EXPECT_EQ(p(1, 1), 0.0f);
  EXPECT_FLOAT_EQ(p(1, 2), 1.0f);
  EXPECT_NEAR(p(0, 0) + p(0, 2), 1.0, 1e-6);
}

TEST(Softmax, FullyMaskedRowIsAnError) {
  auto x = Tensor<float>::from_rows({{1, 2}});
  Mask mask = Mask::from_rows({{0, 0}});
  EXPECT_THROW(softmax_rows(x, &mask), ValueError);
}

TEST(Softmax, RowsSumToOne) {
  Rng rng(19);
  for (int trial = 0; trial < 100; ++trial) {
    auto x = random_tensor<float>(rng, 1 + rng.below(6), 1 + rng.below(9), -50, 50);
    auto p = softmax_rows(x);
    for (std::size_t r = 0; r < p.rows(); ++r) {
      double s = 0;
      for (float v : p.row(r)) {
        EXPECT_GE(v, 0.0f);
        s += v;
      }
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Elementwise, Basics) {
  EXPECT_EQ(tanh(Tensor<float>::from_rows({{0}}))[0], 0.0f);
  EXPECT_EQ(sigmoid(Tensor<float>::from_rows({{0}}))[0], 0.5f);
  EXPECT_EQ(add(Tensor<float>::from_rows({{1, 2}}), Tensor<float>::from_rows({{3, 4}})),
            Tensor<float>::from_rows({{4, 6}}));
  EXPECT_EQ(sub(Tensor<float>::from_rows({{1, 2}}), Tensor<float>::from_rows({{3, 5}})),
            Tensor<float>::from_rows({{-2, -3}}));
  EXPECT_EQ(mul(Tensor<float>::from_rows({{1, 2}}), Tensor<float>::from_rows({{3, 4}})),
            Tensor<float>::from_rows({{3, 8}}));
}

TEST(Elementwise, SigmoidSaturatesWithoutOverflow) {
  auto s = sigmoid(Tensor<float>::from_rows({{-200, 200}}));
  EXPECT_EQ(s[0], 0.0f);
  EXPECT_EQ(s[1], 1.0f);
}

TEST(Elementwise, ShapeMismatch) {
  EXPECT_THROW(add(Tensor<float>({1, 2}), Tensor<float>({2, 1})), DimensionError);
}

TEST(Elementwise, NonFiniteIsSurfaced) {
  auto a = Tensor<float>::from_rows({{std::numeric_limits<float>::infinity()}});
  EXPECT_FALSE(all_finite(a));
  EXPECT_THROW(ensure_finite(a, "test"), NumericError);
}

TEST(Concat, FeatureAxis) {
  EXPECT_EQ(concat({Tensor<float>::from_rows({{1}}), Tensor<float>::from_rows({{2}})}, 1),
            Tensor<float>::from_rows({{1, 2}}));
}

TEST(Concat, EmptyPartIsIgnored) {
  auto x = Tensor<float>::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(concat({x, Tensor<float>()}, 1), x);
  EXPECT_EQ(concat({x, Tensor<float>()}, 0), x);
}

TEST(Concat, ShapeArithmetic) {
  auto c = concat({Tensor<float>({2, 3}), Tensor<float>({2, 5})}, 1);
  EXPECT_EQ(c.shape(), (Shape{2, 8}));
}

TEST(Concat, ArgumentOrderAlongRows) {
  auto c = concat({Tensor<float>::from_rows({{1, 2}}), Tensor<float>::from_rows({{3, 4}, {5, 6}})}, 0);
  EXPECT_EQ(c, Tensor<float>::from_rows({{1, 2}, {3, 4}, {5, 6}}));
}

TEST(Concat, IncompatibleDims) {
  EXPECT_THROW(concat({Tensor<float>({2, 3}), Tensor<float>({3, 3})}, 1), DimensionError);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, KnownFirstValue) {
  // First output of the standard 64-bit Mersenne Twister seeded with 5489.
  Rng rng(5489);
  EXPECT_EQ(rng.next_u64(), 14514284786278117030ull);
}

TEST(Rng, UniformInRangeAndBelowBounded) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(rng.below(7), 7u);
  }
}

TEST(Rng, KeyedUniformIsStateless) {
  EXPECT_EQ(keyed_uniform(1, 2, 3, 4, 5), keyed_uniform(1, 2, 3, 4, 5));
  EXPECT_NE(keyed_uniform(1, 2, 3, 4, 5), keyed_uniform(1, 2, 3, 4, 6));
}
