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

#include "train/optimizer.h"

#include <cmath>

#include "common/errors.h"

namespace hnmt {

template <typename T>
OptimizerState<T> OptimizerState<T>::init(const NamedTensors<T>& params, const AdamConfig& config) {
  OptimizerState s;
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m.add(params.name(i), Tensor<T>(params.tensor(i).shape()));
    s.v.add(params.name(i), Tensor<T>(params.tensor(i).shape()));
  }
  s.lr = config.lr;
  s.beta1 = config.beta1;
  s.beta2 = config.beta2;
  s.eps = config.eps;
  return s;
}

template <typename T>
void adam_step(NamedTensors<T>& params, const GradientSet<T>& grads, OptimizerState<T>& state) {
  if (params.names() != grads.names()) throw ValueError("adam_step: gradient names differ from the parameters");
  if (!params.same_layout(grads) || !params.same_layout(state.m) || !params.same_layout(state.v))
    throw DimensionError("adam_step: gradient or moment shapes differ from the parameters");
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params.tensor(i).values();
    auto g = grads.tensor(i).values();
    auto m = state.m.tensor(i).values();
    auto v = state.v.tensor(i).values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k];
      const double mk = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
      const double vk = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      p[k] = static_cast<T>(p[k] - state.lr * (mk / c1) / (std::sqrt(vk / c2) + state.eps));
    }
  }
}

template <typename T>
double global_norm(const GradientSet<T>& grads) {
  double sq = 0.0;
  for (std::size_t i = 0; i < grads.size(); ++i)
    for (T g : grads.tensor(i).values()) sq += static_cast<double>(g) * g;
  return std::sqrt(sq);
}

template <typename T>
double clip_grad_norm(GradientSet<T>& grads, double max_norm) {
  if (!(max_norm > 0.0)) throw ValueError("clip norm must be positive");
  const double norm = global_norm(grads);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (std::size_t i = 0; i < grads.size(); ++i)
      for (T& g : grads.tensor(i).values()) g = static_cast<T>(g * scale);
  }
  return norm;
}

bool maybe_decay_lr(TrainState& state, double& lr, double new_dev_ppl, double factor) {
  const bool decay = !state.dev_ppl_history.empty() && new_dev_ppl > state.dev_ppl_history.back();
  if (decay) lr *= factor;
  state.dev_ppl_history.push_back(new_dev_ppl);
  return decay;
}

#define HNMT_INSTANTIATE_OPTIMIZER(T)                                                                   \
  template struct OptimizerState<T>;                                                          \
  template void adam_step<T>(NamedTensors<T>&, const GradientSet<T>&, OptimizerState<T>&); \
  template double global_norm<T>(const GradientSet<T>&);                                      \
  template double clip_grad_norm<T>(GradientSet<T>&, double);
HNMT_INSTANTIATE_OPTIMIZER(float)
HNMT_INSTANTIATE_OPTIMIZER(double)
#undef HNMT_INSTANTIATE_OPTIMIZER

}  // namespace hnmt
