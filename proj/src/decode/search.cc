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

#include "decode/search.h"

#include "model/functional.h"

namespace hnmt {

template <typename T>
Hypothesis beam_search(const ModelParams<T>& params, const TokenSeq& src, const BeamOptions& options) {
  return beam_search(StepDecoder<T>(params, src), options);
}

template <typename T>
Hypothesis greedy_decode(const ModelParams<T>& params, const TokenSeq& src, std::size_t max_len) {
  return greedy_decode(StepDecoder<T>(params, src), max_len);
}

template Hypothesis beam_search<float>(const ModelParams<float>&, const TokenSeq&, const BeamOptions&);
template Hypothesis beam_search<double>(const ModelParams<double>&, const TokenSeq&, const BeamOptions&);
template Hypothesis greedy_decode<float>(const ModelParams<float>&, const TokenSeq&, std::size_t);
template Hypothesis greedy_decode<double>(const ModelParams<double>&, const TokenSeq&, std::size_t);

}  // namespace hnmt
