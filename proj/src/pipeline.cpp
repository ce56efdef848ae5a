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
#include "mvcon/pipeline.hpp"

#include <cmath>
#include <numeric>

#include "json.hpp"
#include "mvcon/error.hpp"
#include "mvcon/rng.hpp"

namespace mvcon::pipeline {
namespace {

using evalx::Variant;

constexpr std::uint64_t kSplitSalt = 0x73706c6974;
constexpr std::uint64_t kFractionSalt = 0x66726163;

bool is_text(Variant v, int slot) {
  switch (v) {
    case Variant::kR: return false;
    case Variant::kT: return slot == 0;
    case Variant::kTR: return slot == 0;
    case Variant::kTTC: return true;
    case Variant::kRRC: return false;
    case Variant::kTRC: return slot == 0;
  }
  return false;
}

bool two_models(Variant v) { return v != Variant::kR && v != Variant::kT; }

std::vector<int> labels_of(std::span<const coteach::Instance> instances) {
  std::vector<int> out;
  for (const auto& i : instances) out.push_back(i.target > 0.5 ? 1 : 0);
  return out;
}

}  // namespace

CorpusBundle generate(const RunConfig& cfg, std::uint64_t seed) {
  auto synth = corpus::generate_synthetic(cfg.synth_for(seed));
  CorpusBundle out{std::move(synth.corpus), {}};
  out.split = corpus::split(out.corpus.pairs, cfg.split_fractions, derive_seed(seed, kSplitSalt));
  return out;
}

std::vector<corpus::LabeledPair> train_subset(const corpus::DatasetSplit& split, double fraction,
                                              std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "train_fraction must lie in (0, 1]");
  }
  if (fraction == 1.0) return split.train;
  const std::size_t n = split.train.size();
  const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, kFractionSalt));
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<char> chosen(n, 0);
  for (std::size_t i = 0; i < keep; ++i) chosen[order[i]] = 1;
  std::vector<corpus::LabeledPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (chosen[i]) out.push_back(split.train[i]);
  }
  return out;
}

GraphBundle build_graph(const corpus::Corpus& corpus, std::span<const corpus::LabeledPair> train_pairs,
                        const RunConfig& cfg) {
  auto report = relgraph::extract_keywords(relgraph::document_words(corpus), cfg.keywords);
  std::vector<corpus::LabeledPair> positives;
  for (const auto& p : train_pairs) {
    if (p.label == corpus::Label::kMatch) positives.push_back(p);
  }
  auto graph = relgraph::build_graph(corpus, report.keywords, positives, {cfg.matched_edges});
  return GraphBundle{std::move(report), std::move(graph)};
}

Prepared assemble(corpus::Corpus corpus, const corpus::DatasetSplit& split, relgraph::RelationGraph graph,
                  const RunConfig& cfg, std::uint64_t seed) {
  if (graph.node_count() != corpus.documents.size()) {
    throw Error(ErrorCode::kFormat, "graph node count does not match the corpus");
  }
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    if (graph.node_ids()[i] != corpus.documents[i].id()) {
      throw Error(ErrorCode::kFormat, "graph node order does not match the corpus at " + graph.node_ids()[i]);
    }
  }
  auto adj = relmatch::RelationAdjacency::build(graph);
  const auto train_pairs = train_subset(split, cfg.train_fraction, seed);
  Prepared p{std::move(corpus), std::move(graph), std::move(adj), {}, {}, {}};
  p.train = coteach::to_instances(p.corpus, train_pairs);
  p.valid = coteach::to_instances(p.corpus, split.valid);
  p.test = coteach::to_instances(p.corpus, split.test);
  return p;
}

Prepared prepare_synthetic(const RunConfig& cfg, std::uint64_t seed) {
  auto bundle = generate(cfg, seed);
  const auto train_pairs = train_subset(bundle.split, cfg.train_fraction, seed);
  auto g = build_graph(bundle.corpus, train_pairs, cfg);
  return assemble(std::move(bundle.corpus), bundle.split, std::move(g.graph), cfg, seed);
}

TrainedVariant::TrainedVariant(const Prepared& data, const RunConfig& cfg, Variant variant, std::uint64_t seed)
    : variant_(variant), seed_(seed) {
  const auto enc = cfg.encoder(data.corpus.vocab.size());
  const int slots = two_models(variant) ? 2 : 1;
  for (int s = 0; s < slots; ++s) {
    if (is_text(variant, s)) {
      const bool enhanced = variant == Variant::kTRC;
      text_[s] = std::make_unique<textmatch::TextMatchModel>(enc, enhanced, derive_seed(seed, 0x10 + s));
    } else {
      const bool text_init = variant == Variant::kTRC;
      rel_[s] = std::make_unique<relmatch::RelMatchModel>(cfg.rgcn(), data.graph.relation_count(),
                                                          data.graph.node_count(), text_init,
                                                          derive_seed(seed, 0x20 + s));
    }
  }
}

bool TrainedVariant::has_model_b() const { return text_[1] != nullptr || rel_[1] != nullptr; }

std::unique_ptr<coteach::Learner> TrainedVariant::learner(const Prepared& data, int slot) const {
  if (text_[slot]) return std::make_unique<coteach::TextLearner>(*text_[slot], data.corpus);
  if (rel_[slot]) return std::make_unique<coteach::RelationLearner>(*rel_[slot], data.adj);
  throw Error(ErrorCode::kInternal, "variant has no model in slot " + std::to_string(slot));
}

void TrainedVariant::fit(const Prepared& data, const RunConfig& cfg) {
  const auto cc = cfg.coteach_for(seed_);
  auto a = learner(data, 0);
  switch (variant_) {
    case Variant::kR:
    case Variant::kT:
      result_a_ = coteach::train_single(*a, data.train, data.valid, cc);
      return;
    case Variant::kTR: {
      auto b = learner(data, 1);
      result_a_ = coteach::train_single(*a, data.train, data.valid, cc);
      result_b_ = coteach::train_single(*b, data.train, data.valid, cc);
      return;
    }
    case Variant::kTTC:
    case Variant::kRRC: {
      auto b = learner(data, 1);
      result_a_ = coteach::train(*a, *b, data.train, data.valid, cc, coteach::Monitor::kA);
      return;
    }
    case Variant::kTRC: {
      auto b = learner(data, 1);
      textmatch::TextMatchModel& text = *text_[0];
      relmatch::RelMatchModel& rel = *rel_[1];
      // Each pass starts by refreshing the cross-view inputs: text vectors
      // seed the graph states, and the propagated states extend the text
      // vectors. Neither carries gradient back to the other model.
      auto hook = [&](std::size_t) {
        tg::NoGrad no_grad;
        rel.set_initial_states(relmatch::init_nodes(data.graph, text.encode_all(data.corpus)));
        text.set_enhancement(rel.final_states(data.adj));
      };
      result_a_ = coteach::train(*a, *b, data.train, data.valid, cc, coteach::Monitor::kA, hook);
      return;
    }
  }
}

std::vector<double> TrainedVariant::score(const Prepared& data, std::span<const coteach::Instance> instances) const {
  auto sa = learner(data, 0)->score(instances);
  if (variant_ != Variant::kTR) return sa;
  const auto sb = learner(data, 1)->score(instances);
  for (std::size_t i = 0; i < sa.size(); ++i) sa[i] = 0.5 * (sa[i] + sb[i]);
  return sa;
}

tg::NamedTensors TrainedVariant::tensors(int slot) const {
  tg::NamedTensors out;
  if (text_[slot]) {
    out = text_[slot]->named_parameters();
    if (text_[slot]->enhanced() && text_[slot]->enhancement().defined()) {
      out.emplace_back("buf.enhancement", text_[slot]->enhancement());
    }
  } else if (rel_[slot]) {
    out = rel_[slot]->named_parameters();
    if (rel_[slot]->text_initialized() && rel_[slot]->initial_states().defined()) {
      out.emplace_back("buf.initial", rel_[slot]->initial_states());
    }
  }
  return out;
}

tg::NamedTensors TrainedVariant::tensors_a() const { return tensors(0); }
tg::NamedTensors TrainedVariant::tensors_b() const { return tensors(1); }

void TrainedVariant::load(int slot, const tg::Checkpoint& ckpt) {
  if (text_[slot]) {
    auto params = text_[slot]->named_parameters();
    tg::restore_into(ckpt, params);
    if (text_[slot]->enhanced()) {
      const tg::Tensor* buf = ckpt.find("buf.enhancement");
      if (buf == nullptr) throw Error(ErrorCode::kFormat, "checkpoint lacks the enhancement states");
      text_[slot]->set_enhancement(*buf);
    }
  } else if (rel_[slot]) {
    auto params = rel_[slot]->named_parameters();
    tg::restore_into(ckpt, params);
    if (rel_[slot]->text_initialized()) {
      const tg::Tensor* buf = ckpt.find("buf.initial");
      if (buf == nullptr) throw Error(ErrorCode::kFormat, "checkpoint lacks the initial node states");
      rel_[slot]->set_initial_states(*buf);
    }
  }
}

void TrainedVariant::load_a(const tg::Checkpoint& ckpt) { load(0, ckpt); }
void TrainedVariant::load_b(const tg::Checkpoint& ckpt) { load(1, ckpt); }

std::optional<tg::Tensor> TrainedVariant::node_states(const Prepared& data) const {
  for (const auto& r : rel_) {
    if (r) {
      tg::NoGrad no_grad;
      return r->final_states(data.adj);
    }
  }
  return std::nullopt;
}

void save_trained(const std::filesystem::path& dir, const TrainedVariant& trained, const Prepared& data,
                  const RunConfig& cfg) {
  auto meta = [&](const char* slot) {
    nlohmann::ordered_json m;
    m["variant"] = evalx::to_string(trained.variant());
    m["seed"] = trained.seed();
    m["slot"] = slot;
    m["config"] = cfg.render();
    return m.dump();
  };
  tg::save_checkpoint(dir / kModelAFile, trained.tensors_a(), meta("a"));
  if (trained.has_model_b()) tg::save_checkpoint(dir / kModelBFile, trained.tensors_b(), meta("b"));
  coteach::write_history(dir / kHistoryFile, trained.result().history);
  if (trained.variant() == Variant::kTR) coteach::write_history(dir / kHistoryBFile, trained.result_b().history);
  if (auto states = trained.node_states(data)) relmatch::write_node_states(dir / kNodeStatesFile, data.graph, *states);
}

TrainedVariant load_trained(const std::filesystem::path& dir, const Prepared& data, const RunConfig& cfg) {
  const auto a = tg::load_checkpoint(dir / kModelAFile);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(a.meta_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("checkpoint metadata: ") + e.what());
  }
  if (!meta.contains("variant") || !meta.contains("seed")) {
    throw Error(ErrorCode::kFormat, "checkpoint metadata lacks variant/seed");
  }
  TrainedVariant t(data, cfg, evalx::parse_variant(meta["variant"].get<std::string>()),
                   meta["seed"].get<std::uint64_t>());
  t.load_a(a);
  if (t.has_model_b()) t.load_b(tg::load_checkpoint(dir / kModelBFile));
  return t;
}

evalx::MetricsReport evaluate(const TrainedVariant& trained, const Prepared& data, double threshold) {
  if (data.test.empty()) throw Error(ErrorCode::kMissingInput, "evaluate: empty test split");
  for (const auto& i : data.test) {
    if (i.sampled()) throw Error(ErrorCode::kConstraint, "evaluate: test split contains a sampled pair");
  }
  const auto scores = trained.score(data, data.test);
  return evalx::classification_metrics(scores, labels_of(data.test), threshold);
}

}  // namespace mvcon::pipeline
