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

#include "train/trainer.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "common/errors.h"
#include "common/format.h"
#include "model/seq2seq.h"
#include "parallel/engine.h"

namespace hnmt {

template <typename T>
double perplexity(const ModelParams<T>& params, const ParallelCorpus& corpus, std::size_t batch_size) {
  if (corpus.empty()) throw ValueError("perplexity of an empty corpus");
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const Batch& b : corpus.sequential_batches(batch_size)) {
    nll += batch_nll_sum(params, b);
    tokens += b.target_tokens();
  }
  return std::exp(nll / static_cast<double>(tokens));
}

std::vector<Batch> make_batches(const ParallelCorpus& corpus, std::size_t batch_size, Rng& rng,
                                std::size_t min_batch) {
  if (batch_size == 0) throw ValueError("batch size must be positive");
  std::vector<std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::size_t b = corpus.src[i].empty() ? 0 : (corpus.src[i].size() - 1) / 4;
    if (buckets.size() <= b) buckets.resize(b + 1);
    buckets[b].push_back(i);
  }
  std::vector<std::size_t> order;
  for (auto& bucket : buckets) {
    rng.shuffle(bucket);
    order.insert(order.end(), bucket.begin(), bucket.end());
  }
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size)
    groups.emplace_back(order.begin() + begin, order.begin() + std::min(order.size(), begin + batch_size));
  if (groups.size() > 1 && groups.back().size() < min_batch) {
    groups[groups.size() - 2].insert(groups[groups.size() - 2].end(), groups.back().begin(), groups.back().end());
    groups.pop_back();
  }
  rng.shuffle(groups);
  std::vector<Batch> out;
  for (const auto& g : groups) out.push_back(corpus.batch(g));
  return out;
}

std::string MetricRecord::to_json() const {
  auto num = [](double v) { return std::isfinite(v) ? fixed4(v) : std::string("null"); };
  std::ostringstream out;
  out << "{\"epoch\": " << epoch << ", \"batches\": " << batches << ", \"loss\": " << num(loss)
      << ", \"dev_ppl\": " << num(dev_ppl) << ", \"lr\": " << num(lr)
      << ", \"lr_decayed\": " << (lr_decayed ? "true" : "false")
      << ", \"src_tokens_per_sec\": " << num(src_tokens_per_sec) << ", \"scaling_factor\": " << num(scaling_factor)
      << "}";
  return out.str();
}

template <typename T>
TrainResult<T> train(const ModelConfig& config, const TrainOptions& options, const ParallelCorpus& train_set,
                     const ParallelCorpus& dev_set) {
  config.validate();
  if (options.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (options.eval_interval <= 0) throw ConfigError("eval interval must be positive");
  if (options.batch_size == 0) throw ConfigError("batch size must be positive");
  if (options.clip_norm < 0.0) throw ConfigError("clip norm must be >= 0");
  if (train_set.empty()) throw ValueError("training corpus is empty");

  const PlacementPlan plan = build_placement(options.strategy, options.n_devices, config);
  ModelConfig model_config = config;
  model_config.variant = plan.variant;
  const std::size_t min_batch =
      options.strategy == Strategy::kDataParallel ? static_cast<std::size_t>(options.n_devices) : 1;
  if (train_set.size() < min_batch)
    throw ValueError("training corpus is smaller than the number of data-parallel replicas");

  TrainResult<T> result{ModelParams<T>::init(model_config, options.seed, options.init_range), {}, options.adam.lr,
                        {}, {}};
  result.state.decay_interval = options.eval_interval;
  OptimizerState<T> opt = OptimizerState<T>::init(result.params.tensors, options.adam);
  Rng shuffle_rng(mix64(options.seed ^ 0x5348554646ULL));
  RunOptions run_options;
  run_options.timeout = options.device_timeout;

  double interval_nll = 0.0;
  std::size_t interval_tokens = 0;
  std::uint64_t interval_src = 0;
  double interval_time = 0.0;
  auto record = [&](bool apply_rule) {
    MetricRecord r;
    r.epoch = result.state.epoch;
    r.batches = result.state.batches_seen;
    r.loss = interval_tokens ? interval_nll / static_cast<double>(interval_tokens) : 0.0;
    r.dev_ppl = std::numeric_limits<double>::quiet_NaN();
    if (!dev_set.empty()) {
      r.dev_ppl = perplexity(result.params, dev_set);
      if (options.dev_ppl_hook) r.dev_ppl = options.dev_ppl_hook(r.batches, r.dev_ppl);
      if (apply_rule) r.lr_decayed = maybe_decay_lr(result.state, result.lr, r.dev_ppl, options.lr_decay);
    }
    r.lr = result.lr;
    r.src_tokens_per_sec = interval_time > 0.0 ? static_cast<double>(interval_src) / interval_time : 0.0;
    double baseline = options.baseline_tokens_per_sec;
    if (baseline <= 0.0 && options.strategy == Strategy::kSerial && options.n_devices == 1)
      baseline = r.src_tokens_per_sec;
    r.scaling_factor =
        baseline > 0.0 ? r.src_tokens_per_sec / baseline : std::numeric_limits<double>::quiet_NaN();
    if (options.metrics) *options.metrics << r.to_json() << "\n" << std::flush;
    result.records.push_back(r);
    interval_nll = 0.0;
    interval_tokens = 0;
    interval_src = 0;
    interval_time = 0.0;
    return r;
  };

  bool done = false;
  for (int epoch = 1; epoch <= options.epochs && !done; ++epoch) {
    result.state.epoch = epoch;
    for (const Batch& batch : make_batches(train_set, options.batch_size, shuffle_rng, min_batch)) {
      run_options.dropout = {model_config.dropout,
                             mix64(options.seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(
                                                                             result.state.batches_seen + 1))};
      const auto start = std::chrono::steady_clock::now();
      StrategyResult<T> step = run_strategy(plan, result.params, batch, run_options);
      if (!std::isfinite(static_cast<double>(step.loss))) {
        throw NumericError("training diverged: non-finite loss at batch " +
                           std::to_string(result.state.batches_seen + 1));
      }
      if (options.clip_norm > 0.0) clip_grad_norm(step.grads, options.clip_norm);
      opt.lr = result.lr;
      adam_step(result.params.tensors, step.grads, opt);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

      ++result.state.batches_seen;
      result.state.tokens_processed += batch.source_tokens();
      result.state.wall_time += seconds;
      result.step_losses.push_back(static_cast<double>(step.loss));
      interval_nll += static_cast<double>(step.loss) * static_cast<double>(step.tokens);
      interval_tokens += step.tokens;
      interval_src += batch.source_tokens();
      interval_time += seconds;

      if (result.state.batches_seen % options.eval_interval == 0) {
        const MetricRecord r = record(true);
        if (options.target_dev_ppl > 0.0 && r.dev_ppl <= options.target_dev_ppl) {
          done = true;
          break;
        }
      }
    }
  }
  if (interval_tokens > 0) record(false);
  return result;
}

#define HNMT_INSTANTIATE_TRAINER(T)                                                             \
  template double perplexity<T>(const ModelParams<T>&, const ParallelCorpus&, std::size_t);   \
  template TrainResult<T> train<T>(const ModelConfig&, const TrainOptions&, const ParallelCorpus&, \
                                   const ParallelCorpus&);
HNMT_INSTANTIATE_TRAINER(float)
HNMT_INSTANTIATE_TRAINER(double)
#undef HNMT_INSTANTIATE_TRAINER

}  // namespace hnmt
