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

#ifndef HNMT_HNMT_H_
#define HNMT_HNMT_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HNMT_API __declspec(dllexport)
#else
#define HNMT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hnmt_status {
  HNMT_OK = 0,
  HNMT_ERR_VALUE = 1,
  HNMT_ERR_CONFIG = 2,
  HNMT_ERR_IO = 3,
  HNMT_ERR_NUMERIC = 4,
  HNMT_ERR_DIMENSION = 5,
  HNMT_ERR_SCHEDULING = 6,
  HNMT_ERR_ARGUMENT = 7, /* null handle or output pointer */
  HNMT_ERR_INTERNAL = 8
} hnmt_status;

typedef struct hnmt_config hnmt_config;
typedef struct hnmt_model hnmt_model;

/* Receives one line at a time, without the trailing newline. */
typedef void (*hnmt_line_fn)(const char* line, void* user);

/* Message of the last failed call on this thread; "" after a success. */
HNMT_API const char* hnmt_last_error(void);
HNMT_API const char* hnmt_version(void);
/* Frees every char* the library hands out. */
HNMT_API void hnmt_string_free(char* s);

HNMT_API hnmt_status hnmt_config_new(hnmt_config** out);
HNMT_API hnmt_status hnmt_config_parse(const char* text, hnmt_config** out);
HNMT_API hnmt_status hnmt_config_load(const char* path, hnmt_config** out);
HNMT_API void hnmt_config_free(hnmt_config* config);
HNMT_API hnmt_status hnmt_config_set(hnmt_config* config, const char* key, const char* value);
HNMT_API hnmt_status hnmt_config_validate(const hnmt_config* config);
HNMT_API hnmt_status hnmt_config_serialize(const hnmt_config* config, char** out);
/* HNMT_CONFIG, when set and non-empty, replaces `path`. */
HNMT_API hnmt_status hnmt_resolve_config_path(const char* path, char** out);

/* Metric records go to the config's metrics file, or to `metrics` when that
   key is empty. */
HNMT_API hnmt_status hnmt_train(const hnmt_config* config, hnmt_line_fn metrics, void* user, char** summary_json);
HNMT_API hnmt_status hnmt_simulate(const hnmt_config* config, const char* strategy, char** report_json);
/* `base` may be null for the default cost model. */
HNMT_API hnmt_status hnmt_calibrate(const hnmt_config* base, const char* targets_json, char** result_json);
HNMT_API hnmt_status hnmt_grad_check(const hnmt_config* config, double* max_rel_err, char** worst_parameter);
/* `strategies` is a comma-separated list. */
HNMT_API hnmt_status hnmt_bench(const hnmt_config* config, const char* strategies, char** tsv);

HNMT_API hnmt_status hnmt_model_load(const char* checkpoint, hnmt_model** out);
HNMT_API void hnmt_model_free(hnmt_model* model);
/* max_len 0 allows twice the source length plus 10 tokens. */
HNMT_API hnmt_status hnmt_model_translate(const hnmt_model* model, const char* line, size_t beam_size,
                                          double length_penalty, size_t max_len, char** out);

HNMT_API hnmt_status hnmt_eval_bleu(const char* hyp_path, const char* ref_path, double* bleu);
HNMT_API hnmt_status hnmt_gen_toy(const char* task, size_t n_sentences, size_t max_len, size_t vocab_size,
                                  uint64_t seed, const char* src_path, const char* tgt_path);

#ifdef __cplusplus
}
#endif

#endif /* HNMT_HNMT_H_ */
