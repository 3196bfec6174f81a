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

#include "cli/commands.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <sstream>

#include "autograd/grad_check.h"
#include "common/errors.h"
#include "common/format.h"
#include "data/vocab.h"
#include "decode/bleu.h"
#include "model/checkpoint.h"
#include "model/params.h"
#include "model/seq2seq.h"
#include "parallel/engine.h"
#include "parallel/schedule.h"
#include "sim/calibrate.h"
#include "sim/simulator.h"
#include "train/optimizer.h"
#include "train/trainer.h"

namespace hnmt {

namespace {

void require(const std::string& value, const std::string& key) {
  if (value.empty()) throw ConfigError("config key '" + key + "' must be set");
}

TrainOptions train_options(const RunConfig& config, std::ostream& metrics) {
  TrainOptions o;
  o.strategy = config.strategy;
  o.n_devices = config.n_devices;
  o.batch_size = static_cast<std::size_t>(config.batch_size);
  o.epochs = config.epochs;
  o.adam.lr = config.lr;
  o.lr_decay = config.lr_decay;
  o.eval_interval = config.lr_decay_interval;
  o.clip_norm = config.clip_norm;
  o.seed = config.seed;
  o.init_range = config.init_range;
  o.target_dev_ppl = config.target_dev_ppl;
  o.baseline_tokens_per_sec = config.baseline_tokens_per_sec;
  o.device_timeout = std::chrono::milliseconds(config.device_timeout_ms);
  o.metrics = &metrics;
  return o;
}

template <typename T>
nlohmann::json train_and_save(const ModelConfig& model, const TrainOptions& options, const ParallelCorpus& train_set,
                              const ParallelCorpus& dev_set, const RunConfig& config, const Vocab& vocab) {
  TrainResult<T> result = train<T>(model, options, train_set, dev_set);
  if (!config.checkpoint.empty())
    save_checkpoint(config.checkpoint, result.params.template cast<float>(), vocab.tokens());
  nlohmann::json out;
  out["epochs"] = result.state.epoch;
  out["batches"] = result.state.batches_seen;
  out["final_lr"] = result.lr;
  const double dev = result.records.empty() ? std::nan("") : result.records.back().dev_ppl;
  out["final_dev_ppl"] = std::isfinite(dev) ? nlohmann::json(dev) : nlohmann::json(nullptr);
  out["lr_decays"] = std::count_if(result.records.begin(), result.records.end(),
                                   [](const MetricRecord& r) { return r.lr_decayed; });
  return out;
}

template <typename T>
double bench_throughput(const PlacementPlan& plan, const ModelConfig& config, const Batch& batch, int steps,
                        std::uint64_t seed, std::chrono::milliseconds timeout) {
  ModelConfig model = config;
  model.variant = plan.variant;
  auto params = ModelParams<T>::init(model, seed);
  AdamConfig adam;
  auto opt = OptimizerState<T>::init(params.tensors, adam);
  RunOptions run;
  run.timeout = timeout;
  auto step = [&](int i) {
    run.dropout = {model.dropout, mix64(seed + static_cast<std::uint64_t>(i))};
    StrategyResult<T> r = run_strategy(plan, params, batch, run);
    adam_step(params.tensors, r.grads, opt);
  };
  step(0);
  const auto start = std::chrono::steady_clock::now();
  for (int i = 1; i <= steps; ++i) step(i);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return static_cast<double>(batch.source_tokens()) * steps / seconds;
}

Batch bench_batch(const ModelConfig& config, int n, int len, std::uint64_t seed) {
  Rng rng(seed);
  Batch b;
  for (int i = 0; i < n; ++i) {
    TokenSeq s, t;
    for (int k = 0; k < len; ++k) {
      s.push_back(kNumReservedIds + static_cast<std::int32_t>(rng.below(config.vocab_size - kNumReservedIds)));
      t.push_back(kNumReservedIds + static_cast<std::int32_t>(rng.below(config.vocab_size - kNumReservedIds)));
    }
    b.src.push_back(std::move(s));
    b.tgt.push_back(std::move(t));
    b.ids.push_back(static_cast<std::uint64_t>(i));
  }
  return b;
}

int devices_for(const RunConfig& config, Strategy s) {
  if (s == Strategy::kSerial) return 1;
  return config.n_devices > 1 ? config.n_devices : 4;
}

}  // namespace

std::vector<Strategy> parse_strategy_list(const std::string& list) {
  std::vector<Strategy> out;
  std::stringstream in(list);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(parse_strategy(item));
  }
  if (out.empty()) throw ConfigError("strategy list is empty");
  return out;
}

std::string run_train(const RunConfig& config, std::ostream& metrics) {
  config.validate();
  require(config.train_src, "train_src");
  require(config.train_tgt, "train_tgt");
  Vocab vocab;
  if (!config.vocab.empty() && std::filesystem::exists(config.vocab)) {
    vocab = Vocab::load(config.vocab);
  } else {
    vocab = Vocab::build({config.train_src, config.train_tgt}, static_cast<std::size_t>(config.model.vocab_size));
    if (!config.vocab.empty()) vocab.save(config.vocab);
  }
  if (vocab.size() > static_cast<std::size_t>(config.model.vocab_size))
    throw ConfigError("vocabulary has " + std::to_string(vocab.size()) + " entries but vocab_size is " +
                      std::to_string(config.model.vocab_size));
  ModelConfig model = config.model;
  model.vocab_size = static_cast<int>(vocab.size());

  const ParallelCorpus train_set = load_parallel(config.train_src, config.train_tgt, vocab);
  ParallelCorpus dev_set;
  if (!config.dev_src.empty() || !config.dev_tgt.empty()) {
    require(config.dev_src, "dev_src");
    require(config.dev_tgt, "dev_tgt");
    dev_set = load_parallel(config.dev_src, config.dev_tgt, vocab);
  }
  const TrainOptions options = train_options(config, metrics);
  nlohmann::json out = model.precision == Precision::kFloat64
                           ? train_and_save<double>(model, options, train_set, dev_set, config, vocab)
                           : train_and_save<float>(model, options, train_set, dev_set, config, vocab);
  out["vocab_size"] = model.vocab_size;
  out["train_sentences"] = train_set.size();
  out["checkpoint"] = config.checkpoint;
  std::ostringstream s;
  s << "{\"epochs\": " << out["epochs"].get<int>() << ", \"batches\": " << out["batches"].get<std::int64_t>()
    << ", \"train_sentences\": " << train_set.size() << ", \"vocab_size\": " << model.vocab_size
    << ", \"final_lr\": " << fixed4(out["final_lr"].get<double>()) << ", \"final_dev_ppl\": "
    << (out["final_dev_ppl"].is_null() ? std::string("null") : fixed4(out["final_dev_ppl"].get<double>()))
    << ", \"lr_decays\": " << out["lr_decays"].get<long>() << ", \"checkpoint\": " << nlohmann::json(config.checkpoint).dump()
    << "}";
  return s.str();
}

std::string run_simulate(const RunConfig& config, Strategy strategy) {
  config.validate();
  const PlacementPlan plan =
      build_placement(strategy, devices_for(config, strategy), config.model, config.sim_layer_devices);
  const WavefrontSchedule schedule = wavefront_order(static_cast<std::size_t>(config.sim_src_len),
                                                     static_cast<std::size_t>(config.sim_tgt_len),
                                                     config.model.depth, plan.variant);
  const int batch = config.sim_batch_size > 0 ? config.sim_batch_size : config.cost.batch_cap(strategy);
  return simulate(plan, schedule, config.cost, batch, config.model).to_json();
}

std::string run_calibrate(const std::string& targets_json, const RunConfig& base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(targets_json);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("targets file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("targets") || !j["targets"].is_object())
    throw ConfigError("targets file needs a \"targets\" object");
  std::map<Strategy, double> targets;
  for (const auto& [name, value] : j["targets"].items()) {
    if (!value.is_number()) throw ConfigError("target for '" + name + "' is not a number");
    targets[parse_strategy(name)] = value.get<double>();
  }
  CalibrationSetup setup;
  setup.initial = base.cost;
  setup.config = full_size_config();
  setup.src_len = base.sim_src_len;
  setup.tgt_len = base.sim_tgt_len;
  if (j.contains("free")) {
    if (!j["free"].is_array()) throw ConfigError("\"free\" must be an array of cost parameter names");
    setup.free.clear();
    for (const auto& p : j["free"]) {
      if (!p.is_string()) throw ConfigError("\"free\" must be an array of cost parameter names");
      setup.free.push_back(parse_cost_param(p.get<std::string>()));
    }
  }
  return calibrate(targets, setup).to_json();
}

Translator::Translator(const std::string& checkpoint) {
  Checkpoint ckpt = load_checkpoint(checkpoint);
  if (ckpt.vocab.size() < static_cast<std::size_t>(kNumReservedIds))
    throw ValueError("checkpoint '" + checkpoint + "' carries no vocabulary");
  params_ = std::move(ckpt.params);
  vocab_ = Vocab::from_tokens({ckpt.vocab.begin() + kNumReservedIds, ckpt.vocab.end()});
  if (vocab_.tokens() != ckpt.vocab) throw ValueError("checkpoint '" + checkpoint + "' has a malformed vocabulary");
}

std::string Translator::translate(const std::string& line, const DecodeRequest& request) const {
  const TokenSeq src = vocab_.encode(line);
  if (src.empty()) return "";
  BeamOptions options;
  options.beam_size = request.beam_size;
  options.length_penalty = request.length_penalty;
  options.max_len = request.max_len > 0 ? request.max_len : 2 * src.size() + 10;
  return vocab_.decode(beam_search(params_, src, options).tokens);
}

std::vector<std::string> run_decode(const std::string& checkpoint, const std::vector<std::string>& inputs,
                                    const DecodeRequest& request) {
  const Translator translator(checkpoint);
  std::vector<std::string> out;
  out.reserve(inputs.size());
  for (const std::string& line : inputs) out.push_back(translator.translate(line, request));
  return out;
}

double run_eval_bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  return corpus_bleu(hypotheses, references);
}

GradCheckSummary run_grad_check(const RunConfig& config) {
  config.validate();
  ModelConfig model = config.model;
  model.precision = Precision::kFloat64;
  auto params = ModelParams<double>::init(model, config.seed, config.grad_check_init_range);
  Rng rng(mix64(config.seed + 1));
  Batch batch;
  for (int i = 0; i < config.grad_check_batch; ++i) {
    TokenSeq s, t;
    const std::size_t ls = 1 + rng.below(4), lt = 1 + rng.below(4);
    for (std::size_t k = 0; k < ls; ++k)
      s.push_back(kNumReservedIds + static_cast<std::int32_t>(rng.below(model.vocab_size - kNumReservedIds)));
    for (std::size_t k = 0; k < lt; ++k)
      t.push_back(kNumReservedIds + static_cast<std::int32_t>(rng.below(model.vocab_size - kNumReservedIds)));
    batch.src.push_back(std::move(s));
    batch.tgt.push_back(std::move(t));
    batch.ids.push_back(static_cast<std::uint64_t>(i));
  }
  Tape<double> tape;
  ParamBinder<double> binder(tape, params.tensors);
  const BatchLayout layout = BatchLayout::build(batch);
  const LossGraph graph = build_loss(tape, binder, model, layout);
  const GradCheckReport report = grad_check(tape, graph.loss_mean, config.grad_check_eps);
  return {report.max_rel_err, report.worst_parameter};
}

std::string run_bench(const RunConfig& config, const std::vector<Strategy>& strategies) {
  config.validate();
  const auto timeout = std::chrono::milliseconds(config.device_timeout_ms);
  auto measure = [&](Strategy s) {
    const int batch_size = config.cost.batch_cap(s);
    const PlacementPlan plan = build_placement(s, devices_for(config, s), config.model);
    const Batch batch = bench_batch(config.model, batch_size, config.bench_sentence_len, config.seed);
    return config.model.precision == Precision::kFloat64
               ? bench_throughput<double>(plan, config.model, batch, config.bench_steps, config.seed, timeout)
               : bench_throughput<float>(plan, config.model, batch, config.bench_steps, config.seed, timeout);
  };
  const double baseline = measure(Strategy::kSerial);
  std::ostringstream out;
  out << "strategy\tsrc_tokens_per_sec\tscaling_factor\tbatch_size\n";
  for (Strategy s : strategies) {
    const double tps = s == Strategy::kSerial ? baseline : measure(s);
    out << to_string(s) << "\t" << fixed4(tps) << "\t" << fixed4(scaling_factor(tps, baseline)) << "\t"
        << config.cost.batch_cap(s) << "\n";
  }
  return out.str();
}

void run_gen_toy(ToyTask task, std::size_t n_sentences, std::size_t max_len, std::size_t vocab_size,
                 std::uint64_t seed, const std::string& src_path, const std::string& tgt_path) {
  const ToyCorpus corpus = gen_toy_corpus(task, n_sentences, max_len, vocab_size, seed);
  write_lines(src_path, corpus.src);
  write_lines(tgt_path, corpus.tgt);
}

}  // namespace hnmt
