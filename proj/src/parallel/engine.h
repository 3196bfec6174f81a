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

#include <chrono>
#include <cstddef>

#include "model/batch.h"
#include "model/params.h"
#include "model/seq2seq.h"
#include "parallel/placement.h"
#include "parallel/trace.h"

namespace hnmt {

struct RunOptions {
  DropoutSpec dropout;
  // Longest a device waits for one message before raising SchedulingError.
  std::chrono::milliseconds timeout{120000};
};

template <typename T>
struct StrategyResult {
  T loss = T(0);  // token-mean NLL over the whole batch
  std::size_t tokens = 0;
  GradientSet<T> grads;  // every model parameter, canonical order
  ExecTrace trace;
};

// One forward/backward pass of `batch` under `plan`. Every virtual device is
// a thread with its own tape; devices exchange activations and gradients
// only through messages, and parameter gradients are reduced at the root.
// The parameters' model variant must match plan.variant (ConfigError).
template <typename T>
StrategyResult<T> run_strategy(const PlacementPlan& plan, const ModelParams<T>& params, const Batch& batch,
                               const RunOptions& options = {});

}  // namespace hnmt
