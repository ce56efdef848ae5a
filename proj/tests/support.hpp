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

// Test helpers and independent reference implementations. Nothing here calls
// into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "mvcon/corpus.hpp"
#include "mvcon/coteach.hpp"
#include "mvcon/optim.hpp"
#include "mvcon/relgraph.hpp"
#include "mvcon/relmatch.hpp"
#include "mvcon/rng.hpp"
#include "mvcon/tensor.hpp"

namespace mvcon::testing {

using tg::Shape;
using tg::Tensor;

inline Tensor random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0, bool requires_grad = true) {
  std::vector<double> v(shape.size());
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(shape, std::move(v), requires_grad);
}

inline std::size_t random_size(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

// ---------------------------------------------------------------------------
// Finite differences

struct GradReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Per element |a - n| / max(|a| + |n|, floor). The floor keeps elements whose
// true gradient is zero (unused embedding rows, for instance) from turning
// round-off into a large ratio.
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), floor);
}

// Compares the taped gradient of the scalar `loss()` with respect to every
// leaf against central differences with step h.
inline GradReport check_gradients(const std::vector<Tensor>& leaves, const std::function<Tensor()>& loss,
                                  double h = 1e-5) {
  std::vector<std::vector<double>> analytic;
  {
    for (auto leaf : leaves) leaf.zero_grad();
    tg::Tape tape;
    const Tensor l = loss();
    tape.backward(l);
    for (const auto& leaf : leaves) {
      if (leaf.has_grad()) {
        analytic.emplace_back(leaf.grad().begin(), leaf.grad().end());
      } else {
        analytic.emplace_back(leaf.size(), 0.0);
      }
    }
  }
  GradReport report;
  tg::NoGrad no_grad;
  for (std::size_t t = 0; t < leaves.size(); ++t) {
    Tensor leaf = leaves[t];
    auto data = leaf.mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = loss().item();
      data[i] = saved - h;
      const double down = loss().item();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      report.max_rel_error = std::max(report.max_rel_error, rel_error(analytic[t][i], numeric));
      ++report.checked;
    }
  }
  return report;
}

// r1^T * x * r2 with fixed random r1, r2: a scalar that weights every output
// entry differently.
inline Tensor random_projection(const Tensor& x, const Tensor& left, const Tensor& right) {
  return tg::matmul(tg::matmul(left, x), right);
}

// ---------------------------------------------------------------------------
// Dense references

inline double gelu_ref(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }
inline double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

using Matrix = std::vector<std::vector<double>>;

inline Matrix to_matrix(const Tensor& t) {
  Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  return m;
}

inline Matrix dense_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.size(), std::vector<double>(b.empty() ? 0 : b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
  return out;
}

// One relational graph convolution from full N x N per-relation adjacency
// matrices: act( sum_t D_t^-1 A_t H W_t + H W_o ).
inline Matrix dense_rgcn_layer(const relgraph::RelationGraph& graph, const Matrix& h,
                               const std::vector<Matrix>& w_rel, const Matrix& w_self,
                               double (*act)(double)) {
  const std::size_t n = graph.node_count();
  Matrix out = dense_matmul(h, w_self);
  for (std::size_t t = 0; t < graph.relation_count(); ++t) {
    Matrix a(n, std::vector<double>(n, 0.0));
    for (std::size_t v = 0; v < n; ++v) {
      const auto nb = graph.neighbors(v, t);
      for (std::size_t u : nb) a[v][u] = 1.0 / static_cast<double>(nb.size());
    }
    const Matrix msg = dense_matmul(dense_matmul(a, h), w_rel[t]);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t j = 0; j < out[v].size(); ++j) out[v][j] += msg[v][j];
  }
  for (auto& row : out)
    for (auto& x : row) x = act(x);
  return out;
}

// Power iteration on the dense Google matrix: dangling columns spread
// uniformly, teleport (1 - d) / n. Runs to a fixed point far below 1e-8.
inline std::vector<double> dense_pagerank(const relgraph::WordGraph& g, double damping) {
  const std::size_t n = g.words.size();
  Matrix m(n, std::vector<double>(n, 0.0));  // m[v][u] = P(u -> v)
  for (std::size_t u = 0; u < n; ++u) {
    double total = 0.0;
    for (std::size_t v = 0; v < n; ++v) total += g.weight(u, v);
    for (std::size_t v = 0; v < n; ++v) m[v][u] = total > 0.0 ? g.weight(u, v) / total : 1.0 / static_cast<double>(n);
  }
  std::vector<double> r(n, 1.0 / static_cast<double>(n)), next(n);
  for (int it = 0; it < 100000; ++it) {
    double diff = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      double s = 0.0;
      for (std::size_t u = 0; u < n; ++u) s += m[v][u] * r[u];
      next[v] = (1.0 - damping) / static_cast<double>(n) + damping * s;
      diff += std::abs(next[v] - r[v]);
    }
    r.swap(next);
    if (diff < 1e-15) break;
  }
  return r;
}

// AUC by counting every positive/negative pair, ties one half.
inline double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

inline double bce_ref(double p, double y) {
  const double q = std::clamp(p, 1e-7, 1.0 - 1e-7);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

// Filtering by enumerating every subset of the sampled instances of size
// floor(delta * K_s): the kept subset has the least total peer loss; among
// equal totals, the lexicographically smallest index list. Explicit
// instances are always kept. Returns ascending indices.
inline std::vector<std::size_t> brute_force_filter(const std::vector<coteach::Instance>& inst,
                                                   const std::vector<double>& peer, double delta) {
  std::vector<std::size_t> sampled, keep;
  for (std::size_t i = 0; i < inst.size(); ++i) (inst[i].sampled() ? sampled : keep).push_back(i);
  const std::size_t ks = sampled.size();
  std::size_t k = 0;
  while (k + 1 <= ks && static_cast<double>(k + 1) <= delta * static_cast<double>(ks) + 1e-9) ++k;
  std::vector<std::size_t> best;
  double best_total = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << ks); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    std::vector<std::size_t> chosen;
    double total = 0.0;
    for (std::size_t b = 0; b < ks; ++b) {
      if (mask & (1u << b)) {
        chosen.push_back(sampled[b]);
        total += bce_ref(peer[sampled[b]], inst[sampled[b]].target);
      }
    }
    const bool better = total < best_total - 1e-12;
    const bool tie = std::abs(total - best_total) <= 1e-12;
    if (better || (tie && chosen < best)) {
      best = chosen;
      best_total = total;
    }
  }
  keep.insert(keep.end(), best.begin(), best.end());
  std::sort(keep.begin(), keep.end());
  return keep;
}

// Two independent learners trained on the halves of the co-teaching batch
// stream with unit weights and no peer interaction at all.
inline void plain_two_model_training(coteach::Learner& a, coteach::Learner& b,
                                     const std::vector<coteach::Instance>& train_set,
                                     const coteach::CoTeachConfig& cfg) {
  auto opt_a = tg::make_optimizer(cfg.optimizer, a.parameters(), cfg.learning_rate);
  auto opt_b = tg::make_optimizer(cfg.optimizer, b.parameters(), cfg.learning_rate);
  auto step = [](coteach::Learner& l, tg::Optimizer& opt, const std::vector<coteach::Instance>& half) {
    tg::Tape tape;
    for (auto& p : l.parameters()) p.zero_grad();
    std::vector<corpus::PairIndex> pairs;
    std::vector<double> y, w(half.size(), 1.0);
    for (const auto& i : half) {
      pairs.push_back(i.pair);
      y.push_back(i.target);
    }
    tape.backward(tg::bce_loss(l.forward(pairs), y, w));
    opt.step();
  };
  Rng rng(cfg.seed);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    for (const auto& idx : coteach::make_batches(train_set.size(), cfg.batch_size, rng)) {
      std::vector<coteach::Instance> batch;
      for (std::size_t i : idx) batch.push_back(train_set[i]);
      const auto [half_a, half_b] = coteach::split_batch(batch, rng);
      step(a, *opt_a, half_a);
      step(b, *opt_b, half_b);
    }
  }
}

// ---------------------------------------------------------------------------
// Fixtures

// A handful of short documents over a small vocabulary, jobs first.
inline corpus::Corpus tiny_corpus(Rng& rng, std::size_t jobs, std::size_t resumes, std::size_t vocab,
                                  std::size_t max_sentences = 3, std::size_t max_len = 5) {
  corpus::Corpus c;
  c.seed = 7;
  std::vector<std::string> words;
  for (std::size_t i = 1; i < vocab; ++i) words.push_back("w" + std::to_string(100 + i));
  c.vocab = corpus::Vocabulary::from_words(words);
  for (std::size_t d = 0; d < jobs + resumes; ++d) {
    const bool job = d < jobs;
    std::vector<std::vector<corpus::TokenId>> sentences(random_size(rng, 1, max_sentences));
    for (auto& s : sentences) {
      s.resize(random_size(rng, 1, max_len));
      for (auto& t : s) t = static_cast<corpus::TokenId>(rng.below(vocab));
    }
    c.documents.emplace_back((job ? "j" : "r") + std::to_string(d), job ? corpus::DocKind::kJob : corpus::DocKind::kResume,
                             "c" + std::to_string(d % 2), std::move(sentences), "");
  }
  c.reindex();
  return c;
}

// Random typed graph over a corpus-free node list.
inline relgraph::RelationGraph random_graph(Rng& rng, std::size_t nodes, std::size_t relations, double density) {
  std::vector<std::string> ids;
  std::vector<corpus::DocKind> kinds;
  for (std::size_t i = 0; i < nodes; ++i) {
    ids.push_back("n" + std::to_string(i));
    kinds.push_back(i % 2 == 0 ? corpus::DocKind::kJob : corpus::DocKind::kResume);
  }
  std::vector<relgraph::RelationType> rel;
  for (std::size_t t = 0; t < relations; ++t) rel.push_back({relgraph::RelationKind::kKeyword, "k" + std::to_string(t)});
  relgraph::RelationGraph g(ids, kinds, rel);
  for (std::size_t t = 0; t < relations; ++t)
    for (std::size_t a = 0; a < nodes; ++a)
      for (std::size_t b = a + 1; b < nodes; ++b)
        if (rng.uniform() < density) g.add_edge(a, b, t);
  return g;
}

inline coteach::Instance make_instance(std::size_t job, std::size_t resume, corpus::Provenance prov,
                                       std::optional<corpus::Label> truth = std::nullopt) {
  coteach::Instance i;
  i.pair = {job, resume};
  i.provenance = prov;
  i.target = prov == corpus::Provenance::kExplicitAccept ? 1.0 : 0.0;
  i.hidden_truth = truth;
  return i;
}

// Random symmetric word graph with integer weights; isolated nodes are dangling.
inline relgraph::WordGraph random_word_graph(Rng& rng, std::size_t n, double density) {
  relgraph::WordGraph g;
  g.adjacency.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.words.push_back("w" + std::to_string(i));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (rng.uniform() < density) {
        const double w = static_cast<double>(1 + rng.below(4));
        g.adjacency[a].emplace_back(b, w);
        g.adjacency[b].emplace_back(a, w);
      }
    }
  }
  for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
  return g;
}

inline double identity_ref(double x) { return x; }

inline double (*act_ref(relmatch::Activation a))(double) {
  switch (a) {
    case relmatch::Activation::kGelu: return gelu_ref;
    case relmatch::Activation::kSigmoid: return sigmoid_ref;
    case relmatch::Activation::kIdentity: return identity_ref;
  }
  return identity_ref;
}

inline constexpr corpus::Provenance kAllProvenances[] = {
    corpus::Provenance::kExplicitAccept, corpus::Provenance::kExplicitReject, corpus::Provenance::kSampledClicking,
    corpus::Provenance::kSampledBrowsing};

inline std::vector<coteach::Instance> random_instances(Rng& rng, std::size_t n, std::size_t nodes = 10) {
  std::vector<coteach::Instance> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto prov = kAllProvenances[rng.below(4)];
    std::optional<corpus::Label> truth;
    if (corpus::is_sampled(prov)) truth = rng.below(3) == 0 ? corpus::Label::kMatch : corpus::Label::kNoMatch;
    out.push_back(make_instance(rng.below(nodes), rng.below(nodes), prov, truth));
  }
  return out;
}

// Small relation-only fixture: two learners over one random graph.
struct RelFixture {
  relgraph::RelationGraph graph;
  relmatch::RelationAdjacency adj;
  relmatch::RelMatchModel ma, mb;
  coteach::RelationLearner a, b;
  std::vector<coteach::Instance> train, valid;

  explicit RelFixture(std::uint64_t seed, Rng rng = Rng(99))
      : graph(random_graph(rng, 12, 2, 0.3)),
        adj(relmatch::RelationAdjacency::build(graph)),
        ma(cfg(), 2, 12, false, seed),
        mb(cfg(), 2, 12, false, seed + 1),
        a(ma, adj),
        b(mb, adj) {
    train = random_instances(rng, 41, 12);
    for (std::size_t i = 0; i < 10; ++i) {
      const auto prov = i % 2 ? corpus::Provenance::kExplicitAccept : corpus::Provenance::kExplicitReject;
      valid.push_back(make_instance(i, 11 - i, prov));
    }
  }
  static relmatch::RgcnConfig cfg() {
    relmatch::RgcnConfig c;
    c.dim = 4;
    return c;
  }
};

inline bool same_values(const coteach::Learner& x, const coteach::Learner& y) {
  const auto px = x.parameters(), py = y.parameters();
  for (std::size_t i = 0; i < px.size(); ++i)
    if (!std::equal(px[i].data().begin(), px[i].data().end(), py[i].data().begin())) return false;
  return true;
}

}  // namespace mvcon::testing

