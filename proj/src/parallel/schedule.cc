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

#include "parallel/schedule.h"

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "common/errors.h"

namespace hnmt {

std::string WaveTask::label() const {
  switch (side) {
    case TaskSide::kEncoder: return "enc.t" + std::to_string(step) + ".l" + std::to_string(layer);
    case TaskSide::kDecoder: return "dec.t" + std::to_string(step) + ".l" + std::to_string(layer);
    case TaskSide::kAttention: return "attn.t" + std::to_string(step);
  }
  return "?";
}

int WavefrontSchedule::wave_count() const {
  int w = 0;
  for (const auto& t : tasks) w = std::max(w, t.wave);
  return w;
}

int WavefrontSchedule::wave_count(TaskSide side) const {
  std::set<int> waves;
  for (const auto& t : tasks)
    if (t.side == side) waves.insert(t.wave);
  return static_cast<int>(waves.size());
}

int WavefrontSchedule::decoder_wave_count() const {
  std::set<int> waves;
  for (const auto& t : tasks)
    if (t.side != TaskSide::kEncoder) waves.insert(t.wave);
  return static_cast<int>(waves.size());
}

std::vector<std::vector<std::size_t>> WavefrontSchedule::waves() const {
  std::vector<std::vector<std::size_t>> out(wave_count());
  for (std::size_t i = 0; i < tasks.size(); ++i) out[tasks[i].wave - 1].push_back(i);
  return out;
}

std::size_t WavefrontSchedule::find(TaskSide side, int step, int layer) const {
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (tasks[i].side == side && tasks[i].step == step && tasks[i].layer == layer) return i;
  throw ValueError("schedule has no task " + WaveTask{side, step, layer, {}, 0}.label());
}

WavefrontSchedule wavefront_order(int src_len, int tgt_len, int depth, FeedVariant variant) {
  if (src_len < 0 || tgt_len < 0 || depth < 1) throw ValueError("wavefront_order: invalid dimensions");
  if (tgt_len > 0 && src_len == 0) throw ValueError("wavefront_order: decoder steps need a source");
  WavefrontSchedule s;
  s.src_len = src_len;
  s.tgt_len = tgt_len;
  s.depth = depth;
  s.variant = variant;
  std::map<std::tuple<int, int, int>, std::size_t> index;
  auto add = [&](TaskSide side, int step, int layer, std::vector<std::size_t> deps) {
    WaveTask task{side, step, layer, std::move(deps), 1};
    for (std::size_t d : task.deps) task.wave = std::max(task.wave, s.tasks[d].wave + 1);
    index[{static_cast<int>(side), step, layer}] = s.tasks.size();
    s.tasks.push_back(std::move(task));
  };
  auto at = [&](TaskSide side, int step, int layer) { return index.at({static_cast<int>(side), step, layer}); };

  for (int t = 0; t < src_len; ++t)
    for (int l = 1; l <= depth; ++l) {
      std::vector<std::size_t> deps;
      if (t > 0) deps.push_back(at(TaskSide::kEncoder, t - 1, l));
      if (l > 1) deps.push_back(at(TaskSide::kEncoder, t, l - 1));
      add(TaskSide::kEncoder, t, l, std::move(deps));
    }
  const bool feeding = variant == FeedVariant::kInputFeeding;
  for (int t = 0; t < tgt_len; ++t) {
    for (int l = 1; l <= depth; ++l) {
      std::vector<std::size_t> deps;
      deps.push_back(t > 0 ? at(TaskSide::kDecoder, t - 1, l) : at(TaskSide::kEncoder, src_len - 1, l));
      if (l > 1) deps.push_back(at(TaskSide::kDecoder, t, l - 1));
      if (l == 1 && feeding && t > 0) deps.push_back(at(TaskSide::kAttention, t - 1, depth + 1));
      add(TaskSide::kDecoder, t, l, std::move(deps));
    }
    add(TaskSide::kAttention, t, depth + 1,
        {at(TaskSide::kDecoder, t, depth), at(TaskSide::kEncoder, src_len - 1, depth)});
  }
  return s;
}

}  // namespace hnmt
