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

#include <cstdint>
#include <vector>

#include "tensor/named_tensors.h"

namespace hnmt {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct OptimizerState {
  NamedTensors<T> m;
  NamedTensors<T> v;
  std::int64_t t = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  // Zero moments shaped like `params`.
  static OptimizerState init(const NamedTensors<T>& params, const AdamConfig& config = {});
};

// Bias-corrected Adam update of every parameter. Throws ValueError when the
// gradient names differ from the parameters' and DimensionError on a shape
// mismatch; nothing is modified in either case.
template <typename T>
void adam_step(NamedTensors<T>& params, const GradientSet<T>& grads, OptimizerState<T>& state);

// Global L2 norm of all gradients.
template <typename T>
double global_norm(const GradientSet<T>& grads);

// Scales the gradients so their global norm is at most max_norm (> 0) and
// returns the norm before clipping.
template <typename T>
double clip_grad_norm(GradientSet<T>& grads, double max_norm);

struct TrainState {
  int epoch = 0;
  std::int64_t batches_seen = 0;
  std::vector<double> dev_ppl_history;  // append-only
  std::int64_t decay_interval = 50;     // batches between dev evaluations
  std::uint64_t tokens_processed = 0;   // source tokens
  double wall_time = 0.0;               // seconds spent in training steps
};

// Called at an interval boundary: multiplies lr by `factor` when the new dev
// perplexity is above the previously recorded one, then records it. Returns
// whether the rate decayed.
bool maybe_decay_lr(TrainState& state, double& lr, double new_dev_ppl, double factor = 0.7);

}  // namespace hnmt
