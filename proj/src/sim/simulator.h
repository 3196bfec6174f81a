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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "model/config.h"
#include "parallel/placement.h"
#include "parallel/schedule.h"

namespace hnmt {

// Relative compute size of the model parts per sentence and step.
struct PartSizes {
  double embedding = 2.0;  // source and target together
  double lstm_layer = 8.0;
  double attention_softmax = 4.0;

  // Parameter counts of a concrete model, in units of H^2.
  static PartSizes from_config(const ModelConfig& config);
  bool operator==(const PartSizes&) const = default;
};

// Costs are in abstract ticks; only ratios are meaningful.
struct CostModel {
  PartSizes sizes;
  // A task of `units` size over `rows` sentences costs
  // units * (compute_per_sentence * rows + task_overhead).
  double compute_per_sentence = 1.0;
  double task_overhead = 0.0;
  double transfer_per_byte = 0.0;
  // Charged once per mini-batch at the root for every synchronized parameter.
  double sync_per_param = 0.0;
  // Backward task cost relative to its forward task; 0 simulates the forward
  // pass only.
  double backward_factor = 2.0;
  std::size_t bytes_per_value = 4;
  std::map<Strategy, int> batch_caps = {{Strategy::kSerial, 64},
                                        {Strategy::kDataParallel, 256},
                                        {Strategy::kModelParallel, 224},
                                        {Strategy::kHybrid, 224},
                                        {Strategy::kHybridIF, 224}};

  double compute_cost(double units, std::size_t rows) const {
    return units * (compute_per_sentence * static_cast<double>(rows) + task_overhead);
  }
  int batch_cap(Strategy s) const;
  // Throws ConfigError on a negative cost or non-positive cap.
  void validate() const;
  bool operator==(const CostModel&) const = default;
};

// A node of the simulated DAG. Each dependency carries the transfer delay
// added between the producer's end and this task's earliest start.
struct SimTask {
  std::string label;
  int device = 0;
  double cost = 0.0;
  std::vector<std::pair<std::size_t, double>> deps;
};

struct DagTiming {
  double makespan = 0.0;
  std::vector<double> busy;  // per device
  std::vector<double> start;
  std::vector<double> end;
};

// Every device runs its tasks in list order, each as soon as the device is
// free and every dependency has ended and its delay elapsed. Tasks must be
// listed in a topological order (deps point backwards); a cycle or forward
// reference throws SchedulingError. Start times only grow with any cost or
// delay.
DagTiming simulate_dag(const std::vector<SimTask>& tasks, int n_devices);

// Longest path through the DAG counting task costs and delays.
double critical_path(const std::vector<SimTask>& tasks);

// Task DAG of one forward/backward pass: the schedule's cells placed by the
// plan, attention split into sentence shards where the plan shards it,
// per-replica copies for data parallelism, and the root synchronization.
// The synchronization runs on the root's communication channel, device index
// plan.n_devices, so it overlaps with compute still pending on the devices;
// simulate the DAG with plan.n_devices + 1 devices.
std::vector<SimTask> build_sim_dag(const PlacementPlan& plan, const WavefrontSchedule& schedule,
                                   const CostModel& cost, int batch, const ModelConfig& config);

struct SimReport {
  Strategy strategy = Strategy::kSerial;
  int n_devices = 1;
  int batch_size = 0;
  int src_len = 0;
  int tgt_len = 0;
  double makespan = 0.0;
  std::vector<double> busy_fraction;
  double tokens_per_tick = 0.0;  // source tokens
  double baseline_tokens_per_tick = 0.0;
  double scaling_factor = 0.0;

  // JSON object with numbers fixed to 4 decimals.
  std::string to_json() const;
};

// Simulates one mini-batch of `batch` sentences. The baseline is Serial on
// one device running config.variant at the serial batch cap, over the same
// sentence lengths. Throws ConfigError when the batch exceeds the strategy's
// cap or the schedule's variant differs from the plan's.
SimReport simulate(const PlacementPlan& plan, const WavefrontSchedule& schedule, const CostModel& cost, int batch,
                   const ModelConfig& config);

// Convenience: placement and schedule built from the strategy, run at the
// strategy's batch cap.
SimReport simulate_strategy(Strategy strategy, const CostModel& cost, const ModelConfig& config, int src_len,
                            int tgt_len);

// tokens_per_sec / baseline. Throws ValueError when the baseline is not
// positive.
double scaling_factor(double tokens_per_sec, double baseline_tokens_per_sec);

}  // namespace hnmt
