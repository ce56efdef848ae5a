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
#pragma once

// Stage wiring shared by the C API, the CLI and the experiment harness.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mvcon/config.hpp"
#include "mvcon/coteach.hpp"
#include "mvcon/corpus.hpp"
#include "mvcon/evalx.hpp"
#include "mvcon/relgraph.hpp"
#include "mvcon/relmatch.hpp"
#include "mvcon/textmatch.hpp"

namespace mvcon::pipeline {

struct CorpusBundle {
  corpus::Corpus corpus;
  corpus::DatasetSplit split;
};

/// Synthetic corpus and its split for one seed.
CorpusBundle generate(const RunConfig& cfg, std::uint64_t seed);

/// The first round(fraction * n) pairs of a seeded permutation of the
/// training pairs, kept in their original order. fraction 1 is the identity.
std::vector<corpus::LabeledPair> train_subset(const corpus::DatasetSplit& split, double fraction,
                                              std::uint64_t seed);

struct GraphBundle {
  relgraph::KeywordReport keywords;
  relgraph::RelationGraph graph;
};

/// Keywords from all document texts; matched links from the positive
/// pairs of `train_pairs` only.
GraphBundle build_graph(const corpus::Corpus& corpus, std::span<const corpus::LabeledPair> train_pairs,
                        const RunConfig& cfg);

/// Everything a training run reads.
struct Prepared {
  corpus::Corpus corpus;
  relgraph::RelationGraph graph;
  relmatch::RelationAdjacency adj;
  std::vector<coteach::Instance> train, valid, test;
};

Prepared assemble(corpus::Corpus corpus, const corpus::DatasetSplit& split, relgraph::RelationGraph graph,
                  const RunConfig& cfg, std::uint64_t seed);

/// generate + build_graph + assemble.
Prepared prepare_synthetic(const RunConfig& cfg, std::uint64_t seed);

class TrainedVariant {
 public:
  /// Fresh, untrained models laid out for `variant`.
  TrainedVariant(const Prepared& data, const RunConfig& cfg, evalx::Variant variant, std::uint64_t seed);
  TrainedVariant(TrainedVariant&&) = default;

  evalx::Variant variant() const { return variant_; }
  std::uint64_t seed() const { return seed_; }

  /// Runs training per the variant's recipe.
  void fit(const Prepared& data, const RunConfig& cfg);

  /// Evaluation scores: model A, or the mean of both heads for TR.
  std::vector<double> score(const Prepared& data, std::span<const coteach::Instance> instances) const;

  const coteach::TrainResult& result() const { return result_a_; }
  const coteach::TrainResult& result_b() const { return result_b_; }

  bool has_model_b() const;
  tg::NamedTensors tensors_a() const;
  tg::NamedTensors tensors_b() const;
  void load_a(const tg::Checkpoint& ckpt);
  void load_b(const tg::Checkpoint& ckpt);

  /// Final node states of the relation model (if any).
  std::optional<tg::Tensor> node_states(const Prepared& data) const;

 private:
  std::unique_ptr<coteach::Learner> learner(const Prepared& data, int slot) const;
  tg::NamedTensors tensors(int slot) const;
  void load(int slot, const tg::Checkpoint& ckpt);

  evalx::Variant variant_;
  std::uint64_t seed_;
  std::unique_ptr<textmatch::TextMatchModel> text_[2];
  std::unique_ptr<relmatch::RelMatchModel> rel_[2];
  coteach::TrainResult result_a_, result_b_;
};

/// model_a.ckpt, model_b.ckpt (when present), history.csv (and history_b.csv
/// for TR), node_states.csv (when a relation model exists).
void save_trained(const std::filesystem::path& dir, const TrainedVariant& trained, const Prepared& data,
                  const RunConfig& cfg);

/// Rebuilds the variant recorded in model_a.ckpt and loads its parameters.
TrainedVariant load_trained(const std::filesystem::path& dir, const Prepared& data, const RunConfig& cfg);

/// Explicit-only test metrics for trained models.
evalx::MetricsReport evaluate(const TrainedVariant& trained, const Prepared& data, double threshold);

// File names used inside an output directory.
inline constexpr const char* kDocsFile = "docs.jsonl";
inline constexpr const char* kPairsFile = "pairs.jsonl";
inline constexpr const char* kSplitFile = "split.json";
inline constexpr const char* kEdgesFile = "edges.jsonl";
inline constexpr const char* kKeywordsFile = "keywords.csv";
inline constexpr const char* kModelAFile = "model_a.ckpt";
inline constexpr const char* kModelBFile = "model_b.ckpt";
inline constexpr const char* kHistoryFile = "history.csv";
inline constexpr const char* kHistoryBFile = "history_b.csv";
inline constexpr const char* kNodeStatesFile = "node_states.csv";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kAblationFile = "ablation.csv";
inline constexpr const char* kSweepFile = "sweep.csv";

}  // namespace mvcon::pipeline
