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

#include <string>

#include "autograd/tape.h"

namespace hnmt {

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_parameter;  // empty when the tape has no parameters
};

// Compares backward() against central finite differences
// (f(w + eps) - f(w - eps)) / (2 eps) for every element of every parameter.
//
// The error of one parameter tensor is ||g - fd|| / max(||g||, ||fd||)
// (Euclidean norms; 0 when both vanish). The report holds the maximum over
// parameters. Replays the tape with forward(), so the graph structure must not
// depend on parameter values. Leaves the tape at the original point.
GradCheckReport grad_check(Tape<double>& tape, NodeId loss, double eps);

}  // namespace hnmt
