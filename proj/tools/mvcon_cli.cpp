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

// mvcon command-line tool. Every stage reads and writes inside --out.
// Exit status is the library status code; failures print one line:
//   error=<name> code=<n> message=<text>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <initializer_list>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "mvcon/mvcon.h"

namespace {

namespace fs = std::filesystem;

struct Options {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = "out";
  bool force = false;
  bool show_config = false;
};

// Carries a status out of a stage.
struct Failure {
  mvcon_status status;
  std::string message;
};

void check(mvcon_status s) {
  if (s != MVCON_OK) throw Failure{s, mvcon_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ConfigPtr = std::unique_ptr<mvcon_config, Deleter<mvcon_config, mvcon_config_free>>;
using CorpusPtr = std::unique_ptr<mvcon_corpus, Deleter<mvcon_corpus, mvcon_corpus_free>>;
using GraphPtr = std::unique_ptr<mvcon_graph, Deleter<mvcon_graph, mvcon_graph_free>>;
using ModelPtr = std::unique_ptr<mvcon_model, Deleter<mvcon_model, mvcon_model_free>>;

std::string config_value(const mvcon_config* cfg, const char* key) {
  char* s = nullptr;
  check(mvcon_config_get(cfg, key, &s));
  std::string out(s);
  mvcon_string_free(s);
  return out;
}

ConfigPtr resolve_config(const Options& opt) {
  mvcon_config* raw = nullptr;
  if (opt.config_path.empty()) {
    check(mvcon_config_new(&raw));
  } else {
    check(mvcon_config_load(opt.config_path.c_str(), &raw));
  }
  ConfigPtr cfg(raw);
  if (opt.seed_given) check(mvcon_config_set(cfg.get(), "seed", std::to_string(opt.seed).c_str()));
  check(mvcon_config_validate(cfg.get()));
  return cfg;
}

void print_config(const char* command, const mvcon_config* cfg) {
  char* text = nullptr;
  check(mvcon_config_render(cfg, &text));
  std::cout << "# mvcon " << mvcon_version() << " " << command << "\n" << text;
  mvcon_string_free(text);
  std::cout << "# seed " << config_value(cfg, "seed") << std::endl;
}

std::uint64_t seed_of(const mvcon_config* cfg) { return std::stoull(config_value(cfg, "seed")); }

fs::path output_dir(const Options& opt, std::initializer_list<const char*> files) {
  const fs::path dir(opt.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{MVCON_ERR_IO, "cannot create " + dir.string() + ": " + ec.message()};
  if (!opt.force) {
    for (const char* f : files) {
      if (fs::exists(dir / f)) {
        throw Failure{MVCON_ERR_OUTPUT_EXISTS, (dir / f).string() + " exists (use --force to overwrite)"};
      }
    }
  }
  return dir;
}

fs::path input_dir(const Options& opt) {
  const fs::path dir(opt.out);
  if (!fs::is_directory(dir)) throw Failure{MVCON_ERR_MISSING_INPUT, "missing input directory " + dir.string()};
  return dir;
}

CorpusPtr load_corpus(const fs::path& dir) {
  mvcon_corpus* c = nullptr;
  check(mvcon_corpus_load(dir.string().c_str(), &c));
  return CorpusPtr(c);
}

GraphPtr load_graph(const mvcon_corpus* corpus, const fs::path& dir) {
  mvcon_graph* g = nullptr;
  check(mvcon_graph_load(corpus, dir.string().c_str(), &g));
  return GraphPtr(g);
}

void gen_corpus(const Options& opt, const mvcon_config* cfg) {
  const auto dir = output_dir(opt, {"docs.jsonl", "pairs.jsonl", "split.json"});
  mvcon_corpus* raw = nullptr;
  check(mvcon_corpus_generate(cfg, seed_of(cfg), &raw));
  CorpusPtr corpus(raw);
  check(mvcon_corpus_save(corpus.get(), dir.string().c_str()));
  mvcon_corpus_stats s{};
  check(mvcon_corpus_stats_get(corpus.get(), &s));
  std::cout << "documents=" << s.n_documents << " jobs=" << s.n_jobs << " resumes=" << s.n_resumes
            << " vocab=" << s.vocab_size << " pairs=" << s.n_pairs << " train=" << s.n_train
            << " valid=" << s.n_valid << " test=" << s.n_test
            << " planted_false_negatives=" << s.n_planted_false_negatives << "\n";
}

void build_graph(const Options& opt, const mvcon_config* cfg) {
  const auto in = input_dir(opt);
  auto corpus = load_corpus(in);
  const auto dir = output_dir(opt, {"edges.jsonl", "keywords.csv"});
  mvcon_graph* raw = nullptr;
  check(mvcon_graph_build(corpus.get(), cfg, &raw));
  GraphPtr graph(raw);
  check(mvcon_graph_save(graph.get(), dir.string().c_str()));
  std::size_t nodes = 0, relations = 0, edges = 0;
  check(mvcon_graph_counts(graph.get(), &nodes, &relations, &edges));
  std::cout << "nodes=" << nodes << " relations=" << relations << " edges=" << edges << "\n";
}

void train(const Options& opt, const mvcon_config* cfg) {
  const auto in = input_dir(opt);
  auto corpus = load_corpus(in);
  auto graph = load_graph(corpus.get(), in);
  const auto dir =
      output_dir(opt, {"model_a.ckpt", "model_b.ckpt", "history.csv", "history_b.csv", "node_states.csv"});
  mvcon_model* raw = nullptr;
  check(mvcon_train(corpus.get(), graph.get(), cfg, seed_of(cfg), &raw));
  ModelPtr model(raw);
  check(mvcon_model_save(model.get(), dir.string().c_str()));
  std::cout << "trained variant=" << config_value(cfg, "variant") << "\n";
}

void evaluate(const Options& opt, const mvcon_config* cfg) {
  const auto in = input_dir(opt);
  auto corpus = load_corpus(in);
  auto graph = load_graph(corpus.get(), in);
  mvcon_model* raw = nullptr;
  check(mvcon_model_load(corpus.get(), graph.get(), cfg, in.string().c_str(), &raw));
  ModelPtr model(raw);
  const auto dir = output_dir(opt, {"metrics.csv"});
  mvcon_metrics m{};
  check(mvcon_evaluate(model.get(), (dir / "metrics.csv").string().c_str(), &m));
  char line[256];
  std::snprintf(line, sizeof line, "auc=%.6f acc=%.6f precision=%.6f recall=%.6f f1=%.6f n=%zu\n", m.auc,
                m.accuracy, m.precision, m.recall, m.f1, m.n_eval);
  std::cout << line;
}

void ablate(const Options& opt, const mvcon_config* cfg) {
  const auto dir = output_dir(opt, {"ablation.csv"});
  std::size_t rows = 0;
  check(mvcon_ablate(cfg, (dir / "ablation.csv").string().c_str(), &rows));
  std::cout << "rows=" << rows << " file=" << (dir / "ablation.csv").string() << "\n";
}

void sweep(const Options& opt, const mvcon_config* cfg) {
  const auto dir = output_dir(opt, {"sweep.csv"});
  std::size_t rows = 0;
  check(mvcon_sweep(cfg, (dir / "sweep.csv").string().c_str(), &rows));
  std::cout << "rows=" << rows << " file=" << (dir / "sweep.csv").string() << "\n";
}

int report(mvcon_status status, const std::string& message) {
  std::cerr << "error=" << mvcon_status_name(status) << " code=" << static_cast<int>(status)
            << " message=" << message << std::endl;
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mvcon: multi-view co-teaching for job-resume matching"};
  app.require_subcommand(1);
  Options opt;

  using Stage = void (*)(const Options&, const mvcon_config*);
  const std::pair<const char*, const char*> commands[] = {
      {"gen-corpus", "generate the synthetic corpus and split"},
      {"build-graph", "extract keywords and build the relation graph"},
      {"train", "train the configured variant"},
      {"evaluate", "score the test split with trained models"},
      {"ablate", "run every configured variant over the seed set"},
      {"sweep", "sweep one parameter over the seed set"},
  };
  const Stage stages[] = {gen_corpus, build_graph, train, evaluate, ablate, sweep};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config_path, "config file (.json or key=value)");
    sub->add_option("--seed", opt.seed, "seed (overrides the config file)");
    sub->add_option("--out", opt.out, "working directory for inputs and outputs")->capture_default_str();
    sub->add_flag("--force", opt.force, "overwrite existing outputs");
    sub->add_flag("--show-config", opt.show_config, "print the resolved config and exit");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(MVCON_ERR_INVALID_CONFIG, e.what());
  }

  try {
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (!subs[i]->parsed()) continue;
      opt.seed_given = subs[i]->count("--seed") > 0;
      auto cfg = resolve_config(opt);
      print_config(commands[i].first, cfg.get());
      if (opt.show_config) return 0;
      stages[i](opt, cfg.get());
    }
  } catch (const Failure& f) {
    return report(f.status, f.message);
  } catch (const std::exception& e) {
    return report(MVCON_ERR_INTERNAL, e.what());
  }
  return 0;
}
