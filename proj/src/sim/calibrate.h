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

#include <map>
#include <string>
#include <vector>

#include "model/config.h"
#include "parallel/placement.h"
#include "sim/simulator.h"

namespace hnmt {

enum class CostParam { kComputePerSentence, kTaskOverhead, kTransferPerByte, kSyncPerParam };

// "compute", "overhead", "transfer", "sync".
std::string to_string(CostParam p);
CostParam parse_cost_param(const std::string& s);

double get_param(const CostModel& model, CostParam p);
void set_param(CostModel& model, CostParam p, double value);

// Full-size translation model: 32K vocabulary, 512-wide embeddings, four
// 1024-wide LSTM layers per side, input feeding.
ModelConfig full_size_config();

struct CalibrationSetup {
  // Serial, DataParallel and ModelParallel follow config.variant; the hybrid
  // strategies force their own.
  ModelConfig config = full_size_config();
  int src_len = 30;
  int tgt_len = 30;
  CostModel initial;
  std::vector<CostParam> free = {CostParam::kTaskOverhead, CostParam::kTransferPerByte, CostParam::kSyncPerParam};
};

struct CalibrationResult {
  CostModel model;
  std::map<Strategy, double> targets;
  std::map<Strategy, double> fitted;
  double residual = 0.0;  // Euclidean norm of fitted - target
  int evaluations = 0;

  std::string to_json() const;
};

// Scaling factor of every strategy in `strategies` at its batch cap.
std::map<Strategy, double> predict_scaling(const CalibrationSetup& setup, const CostModel& model,
                                           const std::vector<Strategy>& strategies);

// Least-squares fit of the free cost parameters to target scaling factors.
// Throws ValueError with fewer targets than free parameters, or when the
// targets do not constrain every free parameter ("degenerate fit").
CalibrationResult calibrate(const std::map<Strategy, double>& targets, const CalibrationSetup& setup);

std::string cost_model_to_json(const CostModel& model);

}  // namespace hnmt
