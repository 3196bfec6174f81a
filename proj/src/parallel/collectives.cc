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

#include "parallel/collectives.h"

#include <algorithm>

#include "common/errors.h"

namespace hnmt {

std::vector<std::pair<std::size_t, std::size_t>> shard_ranges(std::size_t count, std::size_t shards) {
  if (shards == 0) throw ValueError("shard count must be positive");
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t base = count / shards, extra = count % shards;
  std::size_t begin = 0;
  for (std::size_t k = 0; k < shards; ++k) {
    const std::size_t n = base + (k < extra ? 1 : 0);
    out.emplace_back(begin, begin + n);
    begin += n;
  }
  return out;
}

std::vector<Batch> scatter_batch(const Batch& batch, std::size_t shards) {
  if (batch.size() < shards) {
    throw ValueError("cannot scatter " + std::to_string(batch.size()) + " sentences over " +
                     std::to_string(shards) + " shards");
  }
  Batch full = batch;
  if (full.ids.empty())
    for (std::size_t b = 0; b < full.size(); ++b) full.ids.push_back(b);
  std::vector<Batch> out;
  for (auto [begin, end] : shard_ranges(full.size(), shards)) out.push_back(full.slice(begin, end));
  return out;
}

template <typename T>
GradientSet<T> allreduce_grads(std::span<const GradientSet<T>> sets) {
  if (sets.empty()) throw ValueError("allreduce over zero gradient sets");
  GradientSet<T> out = sets[0];
  for (std::size_t k = 1; k < sets.size(); ++k) {
    const auto& g = sets[k];
    if (g.names() != out.names()) {
      throw ValueError("allreduce: gradient set " + std::to_string(k) + " has different parameter names");
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (g.tensor(i).shape() != out.tensor(i).shape()) {
        throw DimensionError("allreduce: '" + out.name(i) + "' has shape " + shape_string(g.tensor(i).shape()) +
                             " in set " + std::to_string(k) + ", expected " +
                             shape_string(out.tensor(i).shape()));
      }
      auto dst = out.tensor(i).values();
      auto src = g.tensor(i).values();
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  }
  return out;
}

template <typename T>
Tensor<T> flatten(const NamedTensors<T>& tensors) {
  Tensor<T> flat({1, tensors.total_elements()});
  auto dst = flat.values();
  std::size_t pos = 0;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto src = tensors.tensor(i).values();
    std::copy(src.begin(), src.end(), dst.begin() + pos);
    pos += src.size();
  }
  return flat;
}

template <typename T>
void unflatten(const Tensor<T>& flat, NamedTensors<T>& into) {
  if (flat.size() != into.total_elements()) {
    throw DimensionError("unflatten: " + std::to_string(flat.size()) + " values for " +
                         std::to_string(into.total_elements()) + " slots");
  }
  auto src = flat.values();
  std::size_t pos = 0;
  for (std::size_t i = 0; i < into.size(); ++i) {
    auto dst = into.tensor(i).values();
    std::copy(src.begin() + pos, src.begin() + pos + dst.size(), dst.begin());
    pos += dst.size();
  }
}

#define HNMT_INSTANTIATE_COLLECTIVES(T)                                            \
  template GradientSet<T> allreduce_grads<T>(std::span<const GradientSet<T>>);    \
  template Tensor<T> flatten<T>(const NamedTensors<T>&);                           \
  template void unflatten<T>(const Tensor<T>&, NamedTensors<T>&);

HNMT_INSTANTIATE_COLLECTIVES(float)
HNMT_INSTANTIATE_COLLECTIVES(double)

}  // namespace hnmt
