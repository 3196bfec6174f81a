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

#include "hnmt/hnmt.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <streambuf>
#include <string>

#include "cli/commands.h"
#include "cli/run_config.h"
#include "common/errors.h"
#include "data/corpus.h"

struct hnmt_config {
  hnmt::RunConfig value;
};

struct hnmt_model {
  explicit hnmt_model(const std::string& path) : translator(path) {}
  hnmt::Translator translator;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
hnmt_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return HNMT_OK;
  } catch (const hnmt::ConfigError& e) {
    g_last_error = e.what();
    return HNMT_ERR_CONFIG;
  } catch (const hnmt::IoError& e) {
    g_last_error = e.what();
    return HNMT_ERR_IO;
  } catch (const hnmt::NumericError& e) {
    g_last_error = e.what();
    return HNMT_ERR_NUMERIC;
  } catch (const hnmt::DimensionError& e) {
    g_last_error = e.what();
    return HNMT_ERR_DIMENSION;
  } catch (const hnmt::SchedulingError& e) {
    g_last_error = e.what();
    return HNMT_ERR_SCHEDULING;
  } catch (const hnmt::ValueError& e) {
    g_last_error = e.what();
    return HNMT_ERR_VALUE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return HNMT_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return HNMT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return HNMT_ERR_INTERNAL;
  }
}

hnmt_status bad_argument() {
  g_last_error = "null handle or pointer argument";
  return HNMT_ERR_ARGUMENT;
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Hands every complete line written to it to a callback.
class LineBuf : public std::streambuf {
 public:
  LineBuf(hnmt_line_fn fn, void* user) : fn_(fn), user_(user) {}
  ~LineBuf() override { flush_line(); }

 protected:
  int_type overflow(int_type c) override {
    if (c == traits_type::eof()) return traits_type::not_eof(c);
    if (c == '\n') {
      flush_line();
    } else {
      line_.push_back(static_cast<char>(c));
    }
    return c;
  }

 private:
  void flush_line() {
    if (fn_ && !line_.empty()) fn_(line_.c_str(), user_);
    line_.clear();
  }

  hnmt_line_fn fn_;
  void* user_;
  std::string line_;
};

}  // namespace

extern "C" {

const char* hnmt_last_error(void) { return g_last_error.c_str(); }

const char* hnmt_version(void) { return "1.0.0"; }

void hnmt_string_free(char* s) { std::free(s); }

hnmt_status hnmt_config_new(hnmt_config** out) {
  if (!out) return bad_argument();
  return guarded([&] { *out = new hnmt_config{}; });
}

hnmt_status hnmt_config_parse(const char* text, hnmt_config** out) {
  if (!text || !out) return bad_argument();
  return guarded([&] { *out = new hnmt_config{hnmt::RunConfig::parse(text)}; });
}

hnmt_status hnmt_config_load(const char* path, hnmt_config** out) {
  if (!path || !out) return bad_argument();
  return guarded([&] { *out = new hnmt_config{hnmt::RunConfig::load(path)}; });
}

void hnmt_config_free(hnmt_config* config) { delete config; }

hnmt_status hnmt_config_set(hnmt_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return bad_argument();
  return guarded([&] { config->value.set(key, value); });
}

hnmt_status hnmt_config_validate(const hnmt_config* config) {
  if (!config) return bad_argument();
  return guarded([&] { config->value.validate(); });
}

hnmt_status hnmt_config_serialize(const hnmt_config* config, char** out) {
  if (!config || !out) return bad_argument();
  return guarded([&] { *out = dup(config->value.serialize()); });
}

hnmt_status hnmt_resolve_config_path(const char* path, char** out) {
  if (!path || !out) return bad_argument();
  return guarded([&] { *out = dup(hnmt::resolve_config_path(path)); });
}

hnmt_status hnmt_train(const hnmt_config* config, hnmt_line_fn metrics, void* user, char** summary_json) {
  if (!config || !summary_json) return bad_argument();
  return guarded([&] {
    std::string summary;
    if (!config->value.metrics.empty()) {
      std::ofstream file(config->value.metrics);
      if (!file) throw hnmt::IoError("cannot write metrics file '" + config->value.metrics + "'");
      summary = hnmt::run_train(config->value, file);
    } else {
      LineBuf buf(metrics, user);
      std::ostream stream(&buf);
      summary = hnmt::run_train(config->value, stream);
    }
    *summary_json = dup(summary);
  });
}

hnmt_status hnmt_simulate(const hnmt_config* config, const char* strategy, char** report_json) {
  if (!config || !strategy || !report_json) return bad_argument();
  return guarded(
      [&] { *report_json = dup(hnmt::run_simulate(config->value, hnmt::parse_strategy(strategy))); });
}

hnmt_status hnmt_calibrate(const hnmt_config* base, const char* targets_json, char** result_json) {
  if (!targets_json || !result_json) return bad_argument();
  return guarded([&] {
    const hnmt::RunConfig defaults;
    *result_json = dup(hnmt::run_calibrate(targets_json, base ? base->value : defaults));
  });
}

hnmt_status hnmt_grad_check(const hnmt_config* config, double* max_rel_err, char** worst_parameter) {
  if (!config || !max_rel_err) return bad_argument();
  return guarded([&] {
    const hnmt::GradCheckSummary r = hnmt::run_grad_check(config->value);
    *max_rel_err = r.max_rel_err;
    if (worst_parameter) *worst_parameter = dup(r.worst_parameter);
  });
}

hnmt_status hnmt_bench(const hnmt_config* config, const char* strategies, char** tsv) {
  if (!config || !strategies || !tsv) return bad_argument();
  return guarded(
      [&] { *tsv = dup(hnmt::run_bench(config->value, hnmt::parse_strategy_list(strategies))); });
}

hnmt_status hnmt_model_load(const char* checkpoint, hnmt_model** out) {
  if (!checkpoint || !out) return bad_argument();
  return guarded([&] { *out = new hnmt_model(checkpoint); });
}

void hnmt_model_free(hnmt_model* model) { delete model; }

hnmt_status hnmt_model_translate(const hnmt_model* model, const char* line, size_t beam_size, double length_penalty,
                                 size_t max_len, char** out) {
  if (!model || !line || !out) return bad_argument();
  return guarded([&] {
    hnmt::DecodeRequest request;
    request.beam_size = beam_size;
    request.length_penalty = length_penalty;
    request.max_len = max_len;
    *out = dup(model->translator.translate(line, request));
  });
}

hnmt_status hnmt_eval_bleu(const char* hyp_path, const char* ref_path, double* bleu) {
  if (!hyp_path || !ref_path || !bleu) return bad_argument();
  return guarded(
      [&] { *bleu = hnmt::run_eval_bleu(hnmt::read_lines(hyp_path), hnmt::read_lines(ref_path)); });
}

hnmt_status hnmt_gen_toy(const char* task, size_t n_sentences, size_t max_len, size_t vocab_size, uint64_t seed,
                         const char* src_path, const char* tgt_path) {
  if (!task || !src_path || !tgt_path) return bad_argument();
  return guarded([&] {
    hnmt::run_gen_toy(hnmt::parse_toy_task(task), n_sentences, max_len, vocab_size, seed, src_path, tgt_path);
  });
}

}  // extern "C"
