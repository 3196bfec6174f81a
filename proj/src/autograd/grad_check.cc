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

#include "autograd/grad_check.h"

#include <algorithm>
#include <cmath>

namespace hnmt {

GradCheckReport grad_check(Tape<double>& tape, NodeId loss, double eps) {
  GradCheckReport report;
  tape.forward();
  tape.backward(loss);
  const GradientSet<double> analytic = tape.parameter_grads();

  for (std::size_t p = 0; p < tape.parameter_count(); ++p) {
    const NodeId leaf = tape.parameter_node(p);
    const Tensor<double>& g = analytic.tensor(p);
    double diff2 = 0.0, g2 = 0.0, fd2 = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double saved = tape.mutable_leaf(leaf)[i];
      tape.mutable_leaf(leaf)[i] = saved + eps;
      tape.forward();
      const double plus = tape.value(loss)[0];
      tape.mutable_leaf(leaf)[i] = saved - eps;
      tape.forward();
      const double minus = tape.value(loss)[0];
      tape.mutable_leaf(leaf)[i] = saved;
      const double fd = (plus - minus) / (2.0 * eps);
      diff2 += (g[i] - fd) * (g[i] - fd);
      g2 += g[i] * g[i];
      fd2 += fd * fd;
    }
    const double denom = std::sqrt(std::max(g2, fd2));
    const double err = denom == 0.0 ? 0.0 : std::sqrt(diff2) / denom;
    if (report.worst_parameter.empty() || err > report.max_rel_err) {
      report.max_rel_err = err;
      report.worst_parameter = tape.parameter_name(p);
    }
  }
  tape.forward();
  return report;
}

}  // namespace hnmt
