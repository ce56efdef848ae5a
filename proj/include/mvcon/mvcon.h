/* Copyright 2026 The mvcon Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef MVCON_MVCON_H_
#define MVCON_MVCON_H_

/* C interface to the mvcon job-resume matching library.
 *
 * Every function returns an mvcon_status. On failure the message of the
 * failing call is available from mvcon_last_error() on the same thread until
 * the next call. Handles are opaque and owned by the caller; release them with
 * the matching *_free function (NULL is accepted). Strings returned through
 * char** out-parameters are released with mvcon_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(MVCON_BUILDING)
#define MVCON_API __declspec(dllexport)
#else
#define MVCON_API __declspec(dllimport)
#endif
#else
#define MVCON_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mvcon_status {
  MVCON_OK = 0,
  MVCON_ERR_INTERNAL = 1,
  MVCON_ERR_INVALID_CONFIG = 2,
  MVCON_ERR_MISSING_INPUT = 3,
  MVCON_ERR_CONSTRAINT = 4,
  MVCON_ERR_DIVERGENCE = 5,
  MVCON_ERR_SHAPE_MISMATCH = 6,
  MVCON_ERR_NON_FINITE = 7,
  MVCON_ERR_IO = 8,
  MVCON_ERR_FORMAT = 9,
  MVCON_ERR_MISSING_CHECKPOINT = 10,
  MVCON_ERR_OUTPUT_EXISTS = 11,
  MVCON_ERR_INVALID_ARGUMENT = 12
} mvcon_status;

typedef struct mvcon_config mvcon_config;
typedef struct mvcon_corpus mvcon_corpus;
typedef struct mvcon_graph mvcon_graph;
typedef struct mvcon_model mvcon_model;

typedef struct mvcon_corpus_stats {
  uint64_t seed;
  size_t n_documents;
  size_t n_jobs;
  size_t n_resumes;
  size_t vocab_size;
  size_t n_pairs;
  size_t n_train;
  size_t n_valid;
  size_t n_test;
  size_t n_planted_false_negatives;
} mvcon_corpus_stats;

typedef struct mvcon_metrics {
  double auc;
  double accuracy;
  double precision;
  double recall;
  double f1;
  size_t tp, fp, tn, fn;
  size_t n_eval;
} mvcon_metrics;

MVCON_API const char* mvcon_version(void);
MVCON_API const char* mvcon_status_name(mvcon_status status);
MVCON_API const char* mvcon_last_error(void);
MVCON_API void mvcon_string_free(char* s);

/* Configuration. Keys and defaults are listed by mvcon_config_render. */
MVCON_API mvcon_status mvcon_config_new(mvcon_config** out);
/* ".json" files are JSON objects; any other extension is key=value lines. */
MVCON_API mvcon_status mvcon_config_load(const char* path, mvcon_config** out);
MVCON_API mvcon_status mvcon_config_set(mvcon_config* cfg, const char* key, const char* value);
MVCON_API mvcon_status mvcon_config_get(const mvcon_config* cfg, const char* key, char** out);
MVCON_API mvcon_status mvcon_config_validate(const mvcon_config* cfg);
MVCON_API mvcon_status mvcon_config_render(const mvcon_config* cfg, char** out);
MVCON_API void mvcon_config_free(mvcon_config* cfg);

/* Corpus: documents, labeled pairs and the train/valid/test split. */
MVCON_API mvcon_status mvcon_corpus_generate(const mvcon_config* cfg, uint64_t seed, mvcon_corpus** out);
/* Writes docs.jsonl, pairs.jsonl and split.json into an existing directory. */
MVCON_API mvcon_status mvcon_corpus_save(const mvcon_corpus* corpus, const char* dir);
MVCON_API mvcon_status mvcon_corpus_load(const char* dir, mvcon_corpus** out);
MVCON_API mvcon_status mvcon_corpus_stats_get(const mvcon_corpus* corpus, mvcon_corpus_stats* out);
MVCON_API void mvcon_corpus_free(mvcon_corpus* corpus);

/* Relation graph over the corpus documents. */
MVCON_API mvcon_status mvcon_graph_build(const mvcon_corpus* corpus, const mvcon_config* cfg, mvcon_graph** out);
/* Writes edges.jsonl and, for built graphs, keywords.csv. */
MVCON_API mvcon_status mvcon_graph_save(const mvcon_graph* graph, const char* dir);
MVCON_API mvcon_status mvcon_graph_load(const mvcon_corpus* corpus, const char* dir, mvcon_graph** out);
MVCON_API mvcon_status mvcon_graph_counts(const mvcon_graph* graph, size_t* nodes, size_t* relations,
                                          size_t* edges);
MVCON_API void mvcon_graph_free(mvcon_graph* graph);

/* Trains the configured variant. */
MVCON_API mvcon_status mvcon_train(const mvcon_corpus* corpus, const mvcon_graph* graph, const mvcon_config* cfg,
                                   uint64_t seed, mvcon_model** out);
/* Writes model_a.ckpt (model_b.ckpt), history.csv and node_states.csv. */
MVCON_API mvcon_status mvcon_model_save(const mvcon_model* model, const char* dir);
/* MVCON_ERR_MISSING_CHECKPOINT when dir holds no model_a.ckpt. */
MVCON_API mvcon_status mvcon_model_load(const mvcon_corpus* corpus, const mvcon_graph* graph,
                                        const mvcon_config* cfg, const char* dir, mvcon_model** out);
MVCON_API mvcon_status mvcon_model_score(const mvcon_model* model, const char* job_id, const char* resume_id,
                                         double* out);
/* Metrics on the explicit-only test split; also writes a one-row report CSV
 * when csv_path is not NULL. */
MVCON_API mvcon_status mvcon_evaluate(const mvcon_model* model, const char* csv_path, mvcon_metrics* out);
MVCON_API void mvcon_model_free(mvcon_model* model);

/* Experiment harness; both write a report CSV. */
MVCON_API mvcon_status mvcon_ablate(const mvcon_config* cfg, const char* csv_path, size_t* rows);
MVCON_API mvcon_status mvcon_sweep(const mvcon_config* cfg, const char* csv_path, size_t* rows);

#ifdef __cplusplus
}
#endif

#endif /* MVCON_MVCON_H_ */
