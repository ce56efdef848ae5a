// Copyright 2026 The mvcon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "mvcon/mvcon.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <new>
#include <optional>
#include <string>

#include "mvcon/config.hpp"
#include "mvcon/error.hpp"
#include "mvcon/evalx.hpp"
#include "mvcon/pipeline.hpp"

struct mvcon_config {
  mvcon::RunConfig cfg;
};

struct mvcon_corpus {
  mvcon::corpus::Corpus corpus;
  mvcon::corpus::DatasetSplit split;
};

struct mvcon_graph {
  std::optional<mvcon::relgraph::KeywordReport> keywords;
  mvcon::relgraph::RelationGraph graph;
  std::uint64_t seed = 0;
};

struct mvcon_model {
  mvcon::RunConfig cfg;
  mvcon::pipeline::Prepared data;
  mvcon::pipeline::TrainedVariant trained;
};

namespace {

namespace fs = std::filesystem;
using mvcon::Error;
using mvcon::ErrorCode;

thread_local std::string g_last_error;

mvcon_status fail(ErrorCode code, const std::string& msg) {
  g_last_error = msg;
  return static_cast<mvcon_status>(code);
}

template <typename Fn>
mvcon_status guard(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return MVCON_OK;
  } catch (const Error& e) {
    return fail(e.code(), e.what());
  } catch (const std::bad_alloc&) {
    return fail(ErrorCode::kInternal, "out of memory");
  } catch (const std::exception& e) {
    return fail(ErrorCode::kInternal, e.what());
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fs::path existing_dir(const char* dir) {
  require(dir, "dir");
  const fs::path p(dir);
  if (!fs::is_directory(p)) throw Error(ErrorCode::kMissingInput, "not a directory: " + p.string());
  return p;
}

mvcon::pipeline::Prepared prepare(const mvcon_corpus& c, const mvcon_graph& g, const mvcon::RunConfig& cfg) {
  return mvcon::pipeline::assemble(c.corpus, c.split, g.graph, cfg, c.corpus.seed);
}

}  // namespace

extern "C" {

const char* mvcon_version(void) { return "0.1.0"; }

const char* mvcon_status_name(mvcon_status status) {
  if (status == MVCON_ERR_INVALID_ARGUMENT) return "invalid_argument";
  return mvcon::error_code_name(static_cast<ErrorCode>(status));
}

const char* mvcon_last_error(void) { return g_last_error.c_str(); }

void mvcon_string_free(char* s) { delete[] s; }

mvcon_status mvcon_config_new(mvcon_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new mvcon_config{};
  });
}

mvcon_status mvcon_config_load(const char* path, mvcon_config** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new mvcon_config{mvcon::RunConfig::load(path)};
  });
}

mvcon_status mvcon_config_set(mvcon_config* cfg, const char* key, const char* value) {
  return guard([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(value, "value");
    cfg->cfg.set(key, value);
  });
}

mvcon_status mvcon_config_get(const mvcon_config* cfg, const char* key, char** out) {
  return guard([&] {
    require(cfg, "cfg");
    require(key, "key");
    require(out, "out");
    *out = dup_string(cfg->cfg.get(key));
  });
}

mvcon_status mvcon_config_validate(const mvcon_config* cfg) {
  return guard([&] {
    require(cfg, "cfg");
    cfg->cfg.validate();
  });
}

mvcon_status mvcon_config_render(const mvcon_config* cfg, char** out) {
  return guard([&] {
    require(cfg, "cfg");
    require(out, "out");
    *out = dup_string(cfg->cfg.render());
  });
}

void mvcon_config_free(mvcon_config* cfg) { delete cfg; }

mvcon_status mvcon_corpus_generate(const mvcon_config* cfg, uint64_t seed, mvcon_corpus** out) {
  return guard([&] {
    require(cfg, "cfg");
    require(out, "out");
    cfg->cfg.validate();
    auto bundle = mvcon::pipeline::generate(cfg->cfg, seed);
    *out = new mvcon_corpus{std::move(bundle.corpus), std::move(bundle.split)};
  });
}

mvcon_status mvcon_corpus_save(const mvcon_corpus* corpus, const char* dir) {
  return guard([&] {
    require(corpus, "corpus");
    const fs::path d = existing_dir(dir);
    mvcon::corpus::write_documents(d / mvcon::pipeline::kDocsFile, corpus->corpus);
    mvcon::corpus::write_pairs(d / mvcon::pipeline::kPairsFile, corpus->corpus);
    mvcon::corpus::write_split_manifest(d / mvcon::pipeline::kSplitFile, corpus->split, corpus->corpus.seed);
  });
}

mvcon_status mvcon_corpus_load(const char* dir, mvcon_corpus** out) {
  return guard([&] {
    require(out, "out");
    const fs::path d = existing_dir(dir);
    auto c = mvcon::corpus::read_corpus(d / mvcon::pipeline::kDocsFile, d / mvcon::pipeline::kPairsFile);
    auto split = mvcon::corpus::read_split_manifest(d / mvcon::pipeline::kSplitFile, c);
    *out = new mvcon_corpus{std::move(c), std::move(split)};
  });
}

mvcon_status mvcon_corpus_stats_get(const mvcon_corpus* corpus, mvcon_corpus_stats* out) {
  return guard([&] {
    require(corpus, "corpus");
    require(out, "out");
    const auto& c = corpus->corpus;
    mvcon_corpus_stats s{};
    s.seed = c.seed;
    s.n_documents = c.documents.size();
    for (const auto& d : c.documents) (d.kind() == mvcon::corpus::DocKind::kJob ? s.n_jobs : s.n_resumes)++;
    s.vocab_size = c.vocab.size();
    s.n_pairs = c.pairs.size();
    s.n_train = corpus->split.train.size();
    s.n_valid = corpus->split.valid.size();
    s.n_test = corpus->split.test.size();
    for (const auto& p : c.pairs) {
      if (mvcon::corpus::is_sampled(p.provenance) && p.hidden_truth == mvcon::corpus::Label::kMatch) {
        ++s.n_planted_false_negatives;
      }
    }
    *out = s;
  });
}

void mvcon_corpus_free(mvcon_corpus* corpus) { delete corpus; }

mvcon_status mvcon_graph_build(const mvcon_corpus* corpus, const mvcon_config* cfg, mvcon_graph** out) {
  return guard([&] {
    require(corpus, "corpus");
    require(cfg, "cfg");
    require(out, "out");
    cfg->cfg.validate();
    const auto train = mvcon::pipeline::train_subset(corpus->split, cfg->cfg.train_fraction, corpus->corpus.seed);
    auto g = mvcon::pipeline::build_graph(corpus->corpus, train, cfg->cfg);
    *out = new mvcon_graph{std::move(g.keywords), std::move(g.graph), corpus->corpus.seed};
  });
}

mvcon_status mvcon_graph_save(const mvcon_graph* graph, const char* dir) {
  return guard([&] {
    require(graph, "graph");
    const fs::path d = existing_dir(dir);
    mvcon::relgraph::write_edges(d / mvcon::pipeline::kEdgesFile, graph->graph, graph->seed);
    if (graph->keywords) mvcon::relgraph::write_keyword_report(d / mvcon::pipeline::kKeywordsFile, *graph->keywords);
  });
}

mvcon_status mvcon_graph_load(const mvcon_corpus* corpus, const char* dir, mvcon_graph** out) {
  return guard([&] {
    require(corpus, "corpus");
    require(out, "out");
    const fs::path d = existing_dir(dir);
    auto g = mvcon::relgraph::read_edges(d / mvcon::pipeline::kEdgesFile, corpus->corpus);
    *out = new mvcon_graph{std::nullopt, std::move(g), corpus->corpus.seed};
  });
}

mvcon_status mvcon_graph_counts(const mvcon_graph* graph, size_t* nodes, size_t* relations, size_t* edges) {
  return guard([&] {
    require(graph, "graph");
    if (nodes) *nodes = graph->graph.node_count();
    if (relations) *relations = graph->graph.relation_count();
    if (edges) {
      std::size_t total = 0;
      for (std::size_t r = 0; r < graph->graph.relation_count(); ++r) total += graph->graph.edge_count(r);
      *edges = total;
    }
  });
}

void mvcon_graph_free(mvcon_graph* graph) { delete graph; }

mvcon_status mvcon_train(const mvcon_corpus* corpus, const mvcon_graph* graph, const mvcon_config* cfg,
                         uint64_t seed, mvcon_model** out) {
  return guard([&] {
    require(corpus, "corpus");
    require(graph, "graph");
    require(cfg, "cfg");
    require(out, "out");
    cfg->cfg.validate();
    auto data = prepare(*corpus, *graph, cfg->cfg);
    mvcon::pipeline::TrainedVariant trained(data, cfg->cfg, cfg->cfg.variant, seed);
    trained.fit(data, cfg->cfg);
    *out = new mvcon_model{cfg->cfg, std::move(data), std::move(trained)};
  });
}

mvcon_status mvcon_model_save(const mvcon_model* model, const char* dir) {
  return guard([&] {
    require(model, "model");
    mvcon::pipeline::save_trained(existing_dir(dir), model->trained, model->data, model->cfg);
  });
}

mvcon_status mvcon_model_load(const mvcon_corpus* corpus, const mvcon_graph* graph, const mvcon_config* cfg,
                              const char* dir, mvcon_model** out) {
  return guard([&] {
    require(corpus, "corpus");
    require(graph, "graph");
    require(cfg, "cfg");
    require(out, "out");
    const fs::path d = existing_dir(dir);
    if (!fs::exists(d / mvcon::pipeline::kModelAFile)) {
      throw Error(ErrorCode::kMissingCheckpoint, "missing checkpoint: " + (d / mvcon::pipeline::kModelAFile).string());
    }
    cfg->cfg.validate();
    auto data = prepare(*corpus, *graph, cfg->cfg);
    auto trained = mvcon::pipeline::load_trained(d, data, cfg->cfg);
    *out = new mvcon_model{cfg->cfg, std::move(data), std::move(trained)};
  });
}

mvcon_status mvcon_model_score(const mvcon_model* model, const char* job_id, const char* resume_id, double* out) {
  return guard([&] {
    require(model, "model");
    require(job_id, "job_id");
    require(resume_id, "resume_id");
    require(out, "out");
    const auto& c = model->data.corpus;
    mvcon::coteach::Instance inst;
    inst.pair = {c.index_of(job_id), c.index_of(resume_id)};
    if (c.documents[inst.pair.job].kind() != mvcon::corpus::DocKind::kJob ||
        c.documents[inst.pair.resume].kind() != mvcon::corpus::DocKind::kResume) {
      throw Error(ErrorCode::kConstraint, "score: expected a job id and a resume id");
    }
    *out = model->trained.score(model->data, std::span<const mvcon::coteach::Instance>(&inst, 1)).at(0);
  });
}

mvcon_status mvcon_evaluate(const mvcon_model* model, const char* csv_path, mvcon_metrics* out) {
  return guard([&] {
    require(model, "model");
    const auto m = mvcon::pipeline::evaluate(model->trained, model->data, model->cfg.threshold);
    if (csv_path != nullptr) {
      mvcon::evalx::AblationResult row;
      row.variant = model->trained.variant();
      row.seed = model->trained.seed();
      row.value = std::numeric_limits<double>::quiet_NaN();
      row.metrics = m;
      row.mean_weight_false_neg = std::numeric_limits<double>::quiet_NaN();
      row.mean_weight_true_neg = std::numeric_limits<double>::quiet_NaN();
      row.wall_seconds = std::numeric_limits<double>::quiet_NaN();
      mvcon::evalx::write_report(csv_path, std::span<const mvcon::evalx::AblationResult>(&row, 1));
    }
    if (out != nullptr) {
      *out = mvcon_metrics{m.auc, m.accuracy, m.precision, m.recall, m.f1, m.tp, m.fp, m.tn, m.fn, m.n_eval};
    }
  });
}

void mvcon_model_free(mvcon_model* model) { delete model; }

mvcon_status mvcon_ablate(const mvcon_config* cfg, const char* csv_path, size_t* rows) {
  return guard([&] {
    require(cfg, "cfg");
    require(csv_path, "csv_path");
    const auto result = mvcon::evalx::ablate(cfg->cfg);
    mvcon::evalx::write_report(csv_path, result);
    if (rows) *rows = result.size();
  });
}

mvcon_status mvcon_sweep(const mvcon_config* cfg, const char* csv_path, size_t* rows) {
  return guard([&] {
    require(cfg, "cfg");
    require(csv_path, "csv_path");
    cfg->cfg.validate();
    const auto result = mvcon::evalx::sweep(cfg->cfg.sweep_param, cfg->cfg.sweep_values, cfg->cfg);
    mvcon::evalx::write_report(csv_path, result);
    if (rows) *rows = result.size();
  });
}

}  // extern "C"
