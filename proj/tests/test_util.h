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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "model/batch.h"
#include "tensor/named_tensors.h"
#include "tensor/rng.h"
#include "tensor/tensor.h"

namespace hnmt::testutil {

template <typename T>
Tensor<T> random_tensor(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t({rows, cols});
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
template <typename T>
double rel_err(const Tensor<T>& a, const Tensor<T>& b) {
  double diff = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += std::pow(double(a[i]) - double(b[i]), 2);
    na += std::pow(double(a[i]), 2);
    nb += std::pow(double(b[i]), 2);
  }
  double denom = std::sqrt(std::max(na, nb));
  return denom == 0 ? 0.0 : std::sqrt(diff) / denom;
}

template <typename T>
double max_rel_err(const NamedTensors<T>& a, const NamedTensors<T>& b) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, rel_err(a.tensor(i), b.at(a.name(i))));
  return worst;
}

inline Batch random_batch(Rng& rng, std::size_t n, int vocab, std::size_t max_len, std::uint64_t first_id = 0) {
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    TokenSeq s, t;
    std::size_t ls = 1 + rng.below(max_len), lt = 1 + rng.below(max_len);
    for (std::size_t k = 0; k < ls; ++k) s.push_back(4 + static_cast<std::int32_t>(rng.below(vocab - 4)));
    for (std::size_t k = 0; k < lt; ++k) t.push_back(4 + static_cast<std::int32_t>(rng.below(vocab - 4)));
    b.src.push_back(s);
    b.tgt.push_back(t);
    b.ids.push_back(first_id + i);
  }
  return b;
}

}  // namespace hnmt::testutil
