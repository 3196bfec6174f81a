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
#include <string>
#include <vector>

#include "model/config.h"

namespace hnmt {

enum class TaskSide { kEncoder, kDecoder, kAttention };

// One unit of the unrolled forward computation: an LSTM cell (side, step,
// layer) for the whole batch, or the attention-softmax of one decoder step.
struct WaveTask {
  TaskSide side = TaskSide::kEncoder;
  int step = 0;   // 0-based
  int layer = 0;  // 1..L for cells, L + 1 for attention
  std::vector<std::size_t> deps;  // indices of direct predecessors
  int wave = 0;                   // 1-based longest-path level
  std::string label() const;
};

// Tasks in creation order (step-major, a valid topological order) with their
// wave numbers. Tasks sharing a wave have no path between them.
struct WavefrontSchedule {
  int src_len = 0;
  int tgt_len = 0;
  int depth = 0;
  FeedVariant variant = FeedVariant::kNoInputFeeding;
  std::vector<WaveTask> tasks;

  int wave_count() const;
  // Waves spanned by tasks of one side.
  int wave_count(TaskSide side) const;
  // Decoder and attention waves together.
  int decoder_wave_count() const;
  // Task indices grouped by wave, in creation order within a wave.
  std::vector<std::vector<std::size_t>> waves() const;
  std::size_t find(TaskSide side, int step, int layer) const;
};

// Encoder cell (t, l) waits for (t-1, l) and (t, l-1). Decoder cell (t, l)
// waits for (t-1, l), or the last encoder cell of layer l when t = 0, and for
// (t, l-1). Attention at step t waits for the top decoder cell at t and the
// top encoder cell at M-1. With input feeding, decoder cell (t, 1) also waits
// for attention at t-1. src_len = 0 or tgt_len = 0 gives an encoder-only or
// empty schedule.
WavefrontSchedule wavefront_order(int src_len, int tgt_len, int depth, FeedVariant variant);

}  // namespace hnmt
