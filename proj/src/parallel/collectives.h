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
#include <span>
#include <utility>
#include <vector>

#include "model/batch.h"
#include "tensor/named_tensors.h"

namespace hnmt {

// Contiguous shard boundaries [begin, end) of `count` items over `shards`
// parts. Sizes differ by at most one, larger shards first.
std::vector<std::pair<std::size_t, std::size_t>> shard_ranges(std::size_t count, std::size_t shards);

// Splits a batch by sentence. Sentence ids are filled in with the batch
// position when the batch has none, so shards keep corpus-wide ids.
// Throws ValueError when the batch has fewer sentences than shards.
std::vector<Batch> scatter_batch(const Batch& batch, std::size_t shards);

// Elementwise sum in shard order ((g0 + g1) + g2) + ... Every set must have
// the same names, order and shapes.
template <typename T>
GradientSet<T> allreduce_grads(std::span<const GradientSet<T>> sets);

// Flattens tensors in canonical order into one 1 x n tensor and back.
template <typename T>
Tensor<T> flatten(const NamedTensors<T>& tensors);
template <typename T>
void unflatten(const Tensor<T>& flat, NamedTensors<T>& into);

}  // namespace hnmt
