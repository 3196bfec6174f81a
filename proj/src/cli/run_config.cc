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

#include "cli/run_config.h"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "common/errors.h"

namespace hnmt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

template <typename I>
I parse_int(const std::string& key, const std::string& v) {
  I out{};
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size())
    throw ConfigError("config key '" + key + "': '" + v + "' is not an integer");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) throw ConfigError("config key '" + key + "': '" + v + "' is not a number");
  return out;
}

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

template <typename I>
Field int_field(std::string key, I RunConfig::*member) {
  return {key, [member](const RunConfig& c) { return std::to_string(c.*member); },
          [key, member](RunConfig& c, const std::string& v) { c.*member = parse_int<I>(key, v); }};
}

Field double_field(std::string key, double RunConfig::*member) {
  return {key, [member](const RunConfig& c) { return exact(c.*member); },
          [key, member](RunConfig& c, const std::string& v) { c.*member = parse_double(key, v); }};
}

Field string_field(std::string key, std::string RunConfig::*member) {
  return {key, [member](const RunConfig& c) { return c.*member; },
          [member](RunConfig& c, const std::string& v) { c.*member = v; }};
}

template <typename Get, typename Set>
Field custom(std::string key, Get get, Set set) {
  return {std::move(key), get, set};
}

Field cap_field(std::string key, Strategy s) {
  return {key, [s](const RunConfig& c) { return std::to_string(c.cost.batch_cap(s)); },
          [key, s](RunConfig& c, const std::string& v) { c.cost.batch_caps[s] = parse_int<int>(key, v); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      custom("vocab_size", [](const RunConfig& c) { return std::to_string(c.model.vocab_size); },
             [](RunConfig& c, const std::string& v) { c.model.vocab_size = parse_int<int>("vocab_size", v); }),
      custom("embed_size", [](const RunConfig& c) { return std::to_string(c.model.embed_size); },
             [](RunConfig& c, const std::string& v) { c.model.embed_size = parse_int<int>("embed_size", v); }),
      custom("hidden_size", [](const RunConfig& c) { return std::to_string(c.model.hidden_size); },
             [](RunConfig& c, const std::string& v) { c.model.hidden_size = parse_int<int>("hidden_size", v); }),
      custom("depth", [](const RunConfig& c) { return std::to_string(c.model.depth); },
             [](RunConfig& c, const std::string& v) { c.model.depth = parse_int<int>("depth", v); }),
      custom("variant", [](const RunConfig& c) { return to_string(c.model.variant); },
             [](RunConfig& c, const std::string& v) { c.model.variant = parse_feed_variant(v); }),
      custom("dropout", [](const RunConfig& c) { return exact(c.model.dropout); },
             [](RunConfig& c, const std::string& v) { c.model.dropout = parse_double("dropout", v); }),
      custom("precision", [](const RunConfig& c) { return to_string(c.model.precision); },
             [](RunConfig& c, const std::string& v) { c.model.precision = parse_precision(v); }),
      custom("strategy", [](const RunConfig& c) { return to_string(c.strategy); },
             [](RunConfig& c, const std::string& v) { c.strategy = parse_strategy(v); }),
      int_field("n_devices", &RunConfig::n_devices),
      int_field("batch_size", &RunConfig::batch_size),
      int_field("epochs", &RunConfig::epochs),
      double_field("lr", &RunConfig::lr),
      double_field("lr_decay", &RunConfig::lr_decay),
      int_field("lr_decay_interval", &RunConfig::lr_decay_interval),
      double_field("clip_norm", &RunConfig::clip_norm),
      int_field("seed", &RunConfig::seed),
      double_field("init_range", &RunConfig::init_range),
      double_field("target_dev_ppl", &RunConfig::target_dev_ppl),
      double_field("baseline_tokens_per_sec", &RunConfig::baseline_tokens_per_sec),
      int_field("device_timeout_ms", &RunConfig::device_timeout_ms),
      string_field("train_src", &RunConfig::train_src),
      string_field("train_tgt", &RunConfig::train_tgt),
      string_field("dev_src", &RunConfig::dev_src),
      string_field("dev_tgt", &RunConfig::dev_tgt),
      string_field("vocab", &RunConfig::vocab),
      string_field("checkpoint", &RunConfig::checkpoint),
      string_field("metrics", &RunConfig::metrics),
      custom("sim_embedding_units", [](const RunConfig& c) { return exact(c.cost.sizes.embedding); },
             [](RunConfig& c, const std::string& v) { c.cost.sizes.embedding = parse_double("sim_embedding_units", v); }),
      custom("sim_lstm_units", [](const RunConfig& c) { return exact(c.cost.sizes.lstm_layer); },
             [](RunConfig& c, const std::string& v) { c.cost.sizes.lstm_layer = parse_double("sim_lstm_units", v); }),
      custom("sim_attention_units", [](const RunConfig& c) { return exact(c.cost.sizes.attention_softmax); },
             [](RunConfig& c, const std::string& v) {
               c.cost.sizes.attention_softmax = parse_double("sim_attention_units", v);
             }),
      custom("sim_compute", [](const RunConfig& c) { return exact(c.cost.compute_per_sentence); },
             [](RunConfig& c, const std::string& v) { c.cost.compute_per_sentence = parse_double("sim_compute", v); }),
      custom("sim_overhead", [](const RunConfig& c) { return exact(c.cost.task_overhead); },
             [](RunConfig& c, const std::string& v) { c.cost.task_overhead = parse_double("sim_overhead", v); }),
      custom("sim_transfer", [](const RunConfig& c) { return exact(c.cost.transfer_per_byte); },
             [](RunConfig& c, const std::string& v) { c.cost.transfer_per_byte = parse_double("sim_transfer", v); }),
      custom("sim_sync", [](const RunConfig& c) { return exact(c.cost.sync_per_param); },
             [](RunConfig& c, const std::string& v) { c.cost.sync_per_param = parse_double("sim_sync", v); }),
      custom("sim_backward_factor", [](const RunConfig& c) { return exact(c.cost.backward_factor); },
             [](RunConfig& c, const std::string& v) { c.cost.backward_factor = parse_double("sim_backward_factor", v); }),
      custom("sim_bytes_per_value", [](const RunConfig& c) { return std::to_string(c.cost.bytes_per_value); },
             [](RunConfig& c, const std::string& v) {
               c.cost.bytes_per_value = parse_int<std::size_t>("sim_bytes_per_value", v);
             }),
      cap_field("sim_cap_serial", Strategy::kSerial),
      cap_field("sim_cap_data_parallel", Strategy::kDataParallel),
      cap_field("sim_cap_model_parallel", Strategy::kModelParallel),
      cap_field("sim_cap_hybrid", Strategy::kHybrid),
      cap_field("sim_cap_hybrid_if", Strategy::kHybridIF),
      int_field("sim_src_len", &RunConfig::sim_src_len),
      int_field("sim_tgt_len", &RunConfig::sim_tgt_len),
      int_field("sim_batch_size", &RunConfig::sim_batch_size),
      custom("sim_layer_devices",
             [](const RunConfig& c) {
               std::string s;
               for (int d : c.sim_layer_devices) s += (s.empty() ? "" : ",") + std::to_string(d);
               return s;
             },
             [](RunConfig& c, const std::string& v) {
               c.sim_layer_devices.clear();
               std::stringstream in(v);
               for (std::string item; std::getline(in, item, ',');)
                 c.sim_layer_devices.push_back(parse_int<int>("sim_layer_devices", trim(item)));
             }),
      int_field("bench_sentence_len", &RunConfig::bench_sentence_len),
      int_field("bench_steps", &RunConfig::bench_steps),
      int_field("grad_check_batch", &RunConfig::grad_check_batch),
      double_field("grad_check_eps", &RunConfig::grad_check_eps),
      double_field("grad_check_init_range", &RunConfig::grad_check_init_range),
  };
  return table;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

std::string RunConfig::serialize() const {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(*this) + "\n";
  return out;
}

void RunConfig::validate() const {
  model.validate();
  cost.validate();
  if (n_devices < 1) throw ConfigError("n_devices must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be positive");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must lie in (0, 1]");
  if (lr_decay_interval < 1) throw ConfigError("lr_decay_interval must be positive");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be >= 0");
  if (!(init_range > 0.0)) throw ConfigError("init_range must be positive");
  if (target_dev_ppl < 0.0 || baseline_tokens_per_sec < 0.0)
    throw ConfigError("target_dev_ppl and baseline_tokens_per_sec must be >= 0");
  if (device_timeout_ms < 1) throw ConfigError("device_timeout_ms must be positive");
  if (sim_src_len < 1 || sim_tgt_len < 0) throw ConfigError("sim_src_len must be positive and sim_tgt_len >= 0");
  if (sim_batch_size < 0) throw ConfigError("sim_batch_size must be >= 0");
  if (bench_sentence_len < 1 || bench_steps < 1) throw ConfigError("bench_sentence_len and bench_steps must be positive");
  if (grad_check_batch < 1 || !(grad_check_eps > 0.0) || !(grad_check_init_range > 0.0))
    throw ConfigError("grad_check_batch, grad_check_eps and grad_check_init_range must be positive");
  build_placement(strategy, n_devices, model);
}

std::string resolve_config_path(const std::string& path) {
  const char* env = std::getenv("HNMT_CONFIG");
  return env && *env ? std::string(env) : path;
}

}  // namespace hnmt
