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

#include "sim/simulator.h"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "common/errors.h"
#include "common/format.h"
#include "model/params.h"
#include "parallel/collectives.h"

namespace hnmt {

PartSizes PartSizes::from_config(const ModelConfig& config) {
  const PartCounts counts = param_count(config);
  const double h2 = static_cast<double>(config.hidden_size) * config.hidden_size;
  PartSizes s;
  s.embedding = static_cast<double>(counts.embedding) / h2;
  s.lstm_layer = static_cast<double>(counts.lstm_stack) / (2.0 * config.depth) / h2;
  s.attention_softmax = static_cast<double>(counts.attn_softmax) / h2;
  return s;
}

int CostModel::batch_cap(Strategy s) const {
  auto it = batch_caps.find(s);
  if (it == batch_caps.end()) throw ConfigError("no batch cap for strategy " + to_string(s));
  return it->second;
}

void CostModel::validate() const {
  const std::pair<const char*, double> fields[] = {{"embedding size", sizes.embedding},
                                                   {"lstm_layer size", sizes.lstm_layer},
                                                   {"attention_softmax size", sizes.attention_softmax},
                                                   {"compute_per_sentence", compute_per_sentence},
                                                   {"task_overhead", task_overhead},
                                                   {"transfer_per_byte", transfer_per_byte},
                                                   {"sync_per_param", sync_per_param},
                                                   {"backward_factor", backward_factor}};
  for (const auto& [name, v] : fields)
    if (!(v >= 0.0)) throw ConfigError(std::string("cost model: ") + name + " must be >= 0");
  for (const auto& [s, cap] : batch_caps)
    if (cap <= 0) throw ConfigError("cost model: batch cap of " + to_string(s) + " must be positive");
}

DagTiming simulate_dag(const std::vector<SimTask>& tasks, int n_devices) {
  DagTiming out;
  out.busy.assign(n_devices, 0.0);
  out.start.assign(tasks.size(), 0.0);
  out.end.assign(tasks.size(), 0.0);
  std::vector<double> free_at(n_devices, 0.0);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const SimTask& t = tasks[i];
    if (t.device < 0 || t.device >= n_devices) {
      throw ValueError("task '" + t.label + "' is on device " + std::to_string(t.device) + " of " +
                       std::to_string(n_devices));
    }
    double start = free_at[t.device];
    for (const auto& [j, delay] : t.deps) {
      if (j >= i) throw SchedulingError("task '" + t.label + "' depends on a later task (cycle)");
      start = std::max(start, out.end[j] + delay);
    }
    out.start[i] = start;
    out.end[i] = start + t.cost;
    free_at[t.device] = out.end[i];
    out.busy[t.device] += t.cost;
    out.makespan = std::max(out.makespan, out.end[i]);
  }
  return out;
}

double critical_path(const std::vector<SimTask>& tasks) {
  std::vector<double> finish(tasks.size(), 0.0);
  double best = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    double start = 0.0;
    for (const auto& [j, delay] : tasks[i].deps) {
      if (j >= i) throw SchedulingError("task '" + tasks[i].label + "' depends on a later task (cycle)");
      start = std::max(start, finish[j] + delay);
    }
    finish[i] = start + tasks[i].cost;
    best = std::max(best, finish[i]);
  }
  return best;
}

std::vector<SimTask> build_sim_dag(const PlacementPlan& plan, const WavefrontSchedule& schedule,
                                   const CostModel& cost, int batch, const ModelConfig& config) {
  cost.validate();
  if (schedule.variant != plan.variant) throw ConfigError("schedule variant differs from the placement's variant");
  if (schedule.depth != config.depth) throw ConfigError("schedule depth differs from the model depth");
  if (batch < 1) throw ValueError("batch size must be positive");
  const bool dp = plan.strategy == Strategy::kDataParallel;
  const bool sharded = plan.strategy == Strategy::kHybrid || plan.strategy == Strategy::kHybridIF;
  const std::size_t replicas = dp ? plan.n_devices : 1;
  if (static_cast<std::size_t>(batch) < replicas) {
    throw ValueError("batch of " + std::to_string(batch) + " cannot be split over " + std::to_string(replicas) +
                     " replicas");
  }
  const double row_bytes = static_cast<double>(config.hidden_size) * static_cast<double>(cost.bytes_per_value);
  const auto replica_rows = shard_ranges(batch, replicas);

  std::vector<SimTask> tasks;
  std::vector<std::size_t> rows_of;  // sentences each task covers
  std::vector<bool> is_attention;

  for (std::size_t r = 0; r < replicas; ++r) {
    const std::size_t rows = replica_rows[r].second - replica_rows[r].first;
    const std::size_t n_shards = sharded ? std::min(plan.attn_devices.size(), rows) : 1;
    const auto shard_rows = shard_ranges(rows, n_shards);
    const std::string prefix = dp ? "r" + std::to_string(r) + ":" : "";
    // Device order follows list order. Without input feeding the attention
    // waits until every decoder cell is done, as in the executed program.
    std::vector<std::size_t> order(schedule.tasks.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (schedule.variant == FeedVariant::kNoInputFeeding) {
      std::stable_partition(order.begin(), order.end(),
                            [&](std::size_t i) { return schedule.tasks[i].side != TaskSide::kAttention; });
    }
    std::vector<std::vector<std::size_t>> instances(schedule.tasks.size());
    for (std::size_t i : order) {
      const WaveTask& w = schedule.tasks[i];
      const bool attn = w.side == TaskSide::kAttention;
      const std::size_t copies = attn ? n_shards : 1;
      for (std::size_t k = 0; k < copies; ++k) {
        SimTask t;
        t.label = prefix + w.label() + (attn && sharded ? ".k" + std::to_string(k) : "");
        std::size_t task_rows = rows;
        double units = cost.sizes.lstm_layer + (w.layer == 1 ? cost.sizes.embedding / 2 : 0.0);
        if (attn) {
          units = cost.sizes.attention_softmax;
          task_rows = shard_rows[k].second - shard_rows[k].first;
          t.device = plan.replicated() ? static_cast<int>(r) : plan.attn_devices[sharded ? k : 0];
        } else {
          t.device = plan.replicated() ? static_cast<int>(r) : plan.layer_device[w.layer];
        }
        t.cost = cost.compute_cost(units, task_rows);
        for (std::size_t d : w.deps) {
          const WaveTask& from = schedule.tasks[d];
          for (std::size_t j : instances[d]) {
            double delay = 0.0;
            if (tasks[j].device != t.device) {
              double moved = static_cast<double>(std::min(rows_of[j], task_rows));
              if (attn && from.side == TaskSide::kEncoder) {
                // The encoder states move once, with the first attention step.
                moved *= w.step == 0 ? schedule.src_len : 0;
              } else if (from.side == TaskSide::kEncoder && w.side == TaskSide::kDecoder && w.step == 0) {
                moved *= 2;  // h and c
              }
              delay = cost.transfer_per_byte * moved * row_bytes;
            }
            t.deps.push_back({j, delay});
          }
        }
        instances[i].push_back(tasks.size());
        tasks.push_back(std::move(t));
        rows_of.push_back(task_rows);
        is_attention.push_back(attn);
      }
    }
  }

  const std::size_t forward = tasks.size();
  std::vector<std::size_t> backward_of(forward, 0);
  if (cost.backward_factor > 0.0) {
    std::vector<std::vector<std::pair<std::size_t, double>>> consumers(forward);
    for (std::size_t i = 0; i < forward; ++i)
      for (const auto& [j, delay] : tasks[i].deps) consumers[j].push_back({i, delay});
    for (std::size_t i = forward; i-- > 0;) {
      SimTask b;
      b.label = "bwd:" + tasks[i].label;
      b.device = tasks[i].device;
      b.cost = tasks[i].cost * cost.backward_factor;
      b.deps.push_back({i, 0.0});
      for (const auto& [c, delay] : consumers[i]) b.deps.push_back({backward_of[c], delay});
      backward_of[i] = tasks.size();
      tasks.push_back(std::move(b));
    }
  }

  const PartCounts counts = param_count(config);
  double synced = 0.0;
  if (dp && plan.n_devices > 1) synced = static_cast<double>(counts.total);
  if (sharded) {
    std::set<int> devices;
    for (std::size_t i = 0; i < forward; ++i)
      if (is_attention[i]) devices.insert(tasks[i].device);
    if (devices.size() > 1) synced = static_cast<double>(counts.attn_softmax);
  }
  if (synced > 0.0) {
    SimTask s;
    s.label = "sync";
    s.device = plan.n_devices;
    s.cost = cost.sync_per_param * synced;
    for (std::size_t i = 0; i < forward; ++i) {
      if (!dp && !is_attention[i]) continue;
      s.deps.push_back({cost.backward_factor > 0.0 ? backward_of[i] : i, 0.0});
    }
    std::sort(s.deps.begin(), s.deps.end());
    tasks.push_back(std::move(s));
  }
  return tasks;
}

std::string SimReport::to_json() const {
  std::ostringstream out;
  out << "{\"strategy\": \"" << to_string(strategy) << "\", \"devices\": " << n_devices
      << ", \"batch_size\": " << batch_size << ", \"src_len\": " << src_len << ", \"tgt_len\": " << tgt_len
      << ", \"makespan_ticks\": " << fixed4(makespan) << ", \"busy_fraction\": [";
  for (std::size_t d = 0; d < busy_fraction.size(); ++d) out << (d ? ", " : "") << fixed4(busy_fraction[d]);
  out << "], \"tokens_per_tick\": " << fixed4(tokens_per_tick)
      << ", \"baseline_tokens_per_tick\": " << fixed4(baseline_tokens_per_tick)
      << ", \"scaling_factor\": " << fixed4(scaling_factor) << "}";
  return out.str();
}

namespace {

double tokens_per_tick(const PlacementPlan& plan, const WavefrontSchedule& schedule, const CostModel& cost,
                       int batch, const ModelConfig& config, SimReport* report) {
  const auto tasks = build_sim_dag(plan, schedule, cost, batch, config);
  DagTiming timing = simulate_dag(tasks, plan.n_devices + 1);
  timing.busy.resize(plan.n_devices);
  const double tokens = static_cast<double>(batch) * schedule.src_len;
  const double rate = timing.makespan > 0.0 ? tokens / timing.makespan : 0.0;
  if (report) {
    report->makespan = timing.makespan;
    report->busy_fraction.clear();
    for (double b : timing.busy) report->busy_fraction.push_back(timing.makespan > 0.0 ? b / timing.makespan : 0.0);
    report->tokens_per_tick = rate;
  }
  return rate;
}

}  // namespace

SimReport simulate(const PlacementPlan& plan, const WavefrontSchedule& schedule, const CostModel& cost, int batch,
                   const ModelConfig& config) {
  const int cap = cost.batch_cap(plan.strategy);
  if (batch > cap) {
    throw ConfigError("batch size " + std::to_string(batch) + " exceeds the " + to_string(plan.strategy) +
                      " memory cap of " + std::to_string(cap));
  }
  SimReport report;
  report.strategy = plan.strategy;
  report.n_devices = plan.n_devices;
  report.batch_size = batch;
  report.src_len = schedule.src_len;
  report.tgt_len = schedule.tgt_len;
  tokens_per_tick(plan, schedule, cost, batch, config, &report);

  const PlacementPlan base_plan = build_placement(Strategy::kSerial, 1, config);
  const WavefrontSchedule base_schedule =
      wavefront_order(schedule.src_len, schedule.tgt_len, schedule.depth, config.variant);
  report.baseline_tokens_per_tick = tokens_per_tick(base_plan, base_schedule, cost,
                                                    cost.batch_cap(Strategy::kSerial), config, nullptr);
  report.scaling_factor = scaling_factor(report.tokens_per_tick, report.baseline_tokens_per_tick);
  return report;
}

SimReport simulate_strategy(Strategy strategy, const CostModel& cost, const ModelConfig& config, int src_len,
                            int tgt_len) {
  const PlacementPlan plan = build_placement(strategy, strategy == Strategy::kSerial ? 1 : 4, config);
  const WavefrontSchedule schedule = wavefront_order(src_len, tgt_len, config.depth, plan.variant);
  return simulate(plan, schedule, cost, cost.batch_cap(strategy), config);
}

double scaling_factor(double tokens_per_sec, double baseline_tokens_per_sec) {
  if (!(baseline_tokens_per_sec > 0.0)) throw ValueError("scaling factor needs a positive baseline");
  return tokens_per_sec / baseline_tokens_per_sec;
}

}  // namespace hnmt
