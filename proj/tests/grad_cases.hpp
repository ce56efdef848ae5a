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

// Random finite-difference cases for every differentiable op and for the two
// composed model forwards. Shared by the unit tests and the acceptance run.

#include <memory>
#include <string>
#include <vector>

#include "mvcon/relmatch.hpp"
#include "mvcon/textmatch.hpp"
#include "support.hpp"

namespace mvcon::testing {

struct GradInstance {
  std::vector<Tensor> leaves;
  std::function<Tensor()> loss;
  std::shared_ptr<void> keep_alive;  // models and graphs the loss refers to
};

struct GradCase {
  std::string name;
  std::function<GradInstance(Rng&)> make;
};

namespace detail {

// Wraps an op output into a scalar through a fixed random projection.
inline GradInstance projected(std::vector<Tensor> leaves, std::function<Tensor()> out, Rng& rng) {
  Tensor probe;
  {
    tg::NoGrad ng;
    probe = out();
  }
  const Tensor left = random_tensor({1, probe.rows()}, rng, -1, 1, false);
  const Tensor right = random_tensor({probe.cols(), 1}, rng, -1, 1, false);
  return {std::move(leaves), [out, left, right] { return random_projection(out(), left, right); }, nullptr};
}

inline std::vector<std::size_t> random_offsets(Rng& rng, std::size_t rows) {
  std::vector<std::size_t> off{0};
  while (off.back() < rows) off.push_back(std::min(rows, off.back() + random_size(rng, 1, 3)));
  return off;
}

inline std::vector<std::size_t> random_index(Rng& rng, std::size_t n, std::size_t bound) {
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(bound));
  return idx;
}

}  // namespace detail

inline std::vector<GradCase> op_grad_cases() {
  using detail::projected;
  std::vector<GradCase> cases;
  auto add = [&](std::string name, std::function<GradInstance(Rng&)> f) { cases.push_back({std::move(name), std::move(f)}); };

  add("matmul", [](Rng& rng) {
    const auto m = random_size(rng, 1, 4), k = random_size(rng, 1, 4), n = random_size(rng, 1, 4);
    Tensor a = random_tensor({m, k}, rng), b = random_tensor({k, n}, rng);
    return projected({a, b}, [=] { return tg::matmul(a, b); }, rng);
  });
  add("matmul_nt", [](Rng& rng) {
    const auto m = random_size(rng, 1, 4), k = random_size(rng, 1, 4), n = random_size(rng, 1, 4);
    Tensor a = random_tensor({m, k}, rng), b = random_tensor({n, k}, rng);
    return projected({a, b}, [=] { return tg::matmul_nt(a, b); }, rng);
  });
  add("transpose", [](Rng& rng) {
    Tensor a = random_tensor({random_size(rng, 1, 4), random_size(rng, 1, 4)}, rng);
    return projected({a}, [=] { return tg::transpose(a); }, rng);
  });
  add("add", [](Rng& rng) {
    const Shape s{random_size(rng, 1, 4), random_size(rng, 1, 4)};
    Tensor a = random_tensor(s, rng), b = random_tensor(s, rng);
    return projected({a, b}, [=] { return tg::add(a, b); }, rng);
  });
  add("add_row", [](Rng& rng) {
    const auto m = random_size(rng, 1, 4), n = random_size(rng, 1, 4);
    Tensor a = random_tensor({m, n}, rng), r = random_tensor({1, n}, rng);
    return projected({a, r}, [=] { return tg::add_row(a, r); }, rng);
  });
  add("add_n", [](Rng& rng) {
    const Shape s{random_size(rng, 1, 4), random_size(rng, 1, 4)};
    std::vector<Tensor> terms;
    for (std::size_t i = random_size(rng, 1, 4); i > 0; --i) terms.push_back(random_tensor(s, rng));
    // The same operand twice must accumulate twice.
    terms.push_back(terms.front());
    return projected(terms, [=] { return tg::add_n(terms); }, rng);
  });
  add("mul", [](Rng& rng) {
    const Shape s{random_size(rng, 1, 4), random_size(rng, 1, 4)};
    Tensor a = random_tensor(s, rng), b = random_tensor(s, rng);
    return projected({a, b}, [=] { return tg::mul(a, b); }, rng);
  });
  add("scale", [](Rng& rng) {
    Tensor a = random_tensor({random_size(rng, 1, 4), random_size(rng, 1, 4)}, rng);
    const double f = rng.uniform(-2, 2);
    return projected({a}, [=] { return tg::scale(a, f); }, rng);
  });
  add("concat", [](Rng& rng) {
    const auto m = random_size(rng, 1, 4);
    Tensor a = random_tensor({m, random_size(rng, 1, 3)}, rng), b = random_tensor({m, random_size(rng, 1, 3)}, rng);
    return projected({a, b}, [=] { return tg::concat(a, b); }, rng);
  });
  add("slice_cols", [](Rng& rng) {
    const auto n = random_size(rng, 2, 6);
    Tensor a = random_tensor({random_size(rng, 1, 4), n}, rng);
    const auto begin = random_size(rng, 0, n - 1), end = random_size(rng, begin + 1, n);
    return projected({a}, [=] { return tg::slice_cols(a, begin, end); }, rng);
  });
  add("stack_rows", [](Rng& rng) {
    const auto n = random_size(rng, 1, 4);
    std::vector<Tensor> parts;
    for (std::size_t i = random_size(rng, 1, 4); i > 0; --i) parts.push_back(random_tensor({random_size(rng, 1, 3), n}, rng));
    return projected(parts, [=] { return tg::stack_rows(parts); }, rng);
  });
  add("gather_rows", [](Rng& rng) {
    const auto m = random_size(rng, 1, 5);
    Tensor a = random_tensor({m, random_size(rng, 1, 4)}, rng);
    const auto idx = detail::random_index(rng, random_size(rng, 1, 7), m);  // repeats allowed
    return projected({a}, [=] { return tg::gather_rows(a, idx); }, rng);
  });
  add("scatter_rows", [](Rng& rng) {
    const auto rows = random_size(rng, 2, 6);
    const auto idx = detail::random_index(rng, random_size(rng, 1, 5), rows);
    Tensor a = random_tensor({idx.size(), random_size(rng, 1, 4)}, rng);
    return projected({a}, [=] { return tg::scatter_rows(a, idx, rows); }, rng);
  });
  add("spmm", [](Rng& rng) {
    const auto m = random_size(rng, 1, 4), k = random_size(rng, 1, 5);
    tg::SparseRows sp;
    sp.cols = k;
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < k; ++c) {
        if (rng.uniform() < 0.5) {
          sp.col.push_back(c);
          sp.val.push_back(rng.uniform(-1, 1));
        }
      }
      sp.row_ptr.push_back(sp.col.size());
    }
    Tensor x = random_tensor({k, random_size(rng, 1, 4)}, rng);
    return projected({x}, [=] { return tg::spmm(sp, x); }, rng);
  });
  add("sigmoid", [](Rng& rng) {
    Tensor a = random_tensor({random_size(rng, 1, 4), random_size(rng, 1, 4)}, rng, -3, 3);
    return projected({a}, [=] { return tg::sigmoid(a); }, rng);
  });
  add("gelu", [](Rng& rng) {
    Tensor a = random_tensor({random_size(rng, 1, 4), random_size(rng, 1, 4)}, rng, -3, 3);
    return projected({a}, [=] { return tg::gelu(a); }, rng);
  });
  add("softmax", [](Rng& rng) {
    Tensor a = random_tensor({random_size(rng, 1, 4), random_size(rng, 1, 5)}, rng, -2, 2);
    return projected({a}, [=] { return tg::softmax(a); }, rng);
  });
  add("layer_norm", [](Rng& rng) {
    const auto n = random_size(rng, 2, 5);
    Tensor x = random_tensor({random_size(rng, 1, 4), n}, rng), g = random_tensor({1, n}, rng, 0.5, 1.5),
           b = random_tensor({1, n}, rng);
    return projected({x, g, b}, [=] { return tg::layer_norm(x, g, b); }, rng);
  });
  add("embedding_lookup", [](Rng& rng) {
    const auto v = random_size(rng, 2, 6);
    Tensor table = random_tensor({v, random_size(rng, 1, 4)}, rng);
    const auto ids = detail::random_index(rng, random_size(rng, 1, 6), v);
    return projected({table}, [=] { return tg::embedding_lookup(table, ids); }, rng);
  });
  add("mean_pool", [](Rng& rng) {
    Tensor a = random_tensor({random_size(rng, 1, 4), random_size(rng, 1, 4)}, rng);
    const int axis = static_cast<int>(rng.below(2));
    return projected({a}, [=] { return tg::mean_pool(a, axis); }, rng);
  });
  add("segment_attention", [](Rng& rng) {
    const auto heads = random_size(rng, 1, 2), rows = random_size(rng, 1, 6);
    const Shape s{rows, heads * random_size(rng, 1, 3)};
    Tensor q = random_tensor(s, rng), k = random_tensor(s, rng), v = random_tensor(s, rng);
    const auto off = detail::random_offsets(rng, rows);
    return projected({q, k, v}, [=] { return tg::segment_attention(q, k, v, off, heads); }, rng);
  });
  add("segment_mean", [](Rng& rng) {
    const auto rows = random_size(rng, 1, 6);
    Tensor a = random_tensor({rows, random_size(rng, 1, 4)}, rng);
    const auto off = detail::random_offsets(rng, rows);
    return projected({a}, [=] { return tg::segment_mean(a, off); }, rng);
  });
  add("bce_loss", [](Rng& rng) {
    const auto n = random_size(rng, 1, 6);
    Tensor p = random_tensor({n, 1}, rng, 0.05, 0.95);
    std::vector<double> y(n), w(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = static_cast<double>(rng.below(2));
      w[i] = rng.uniform();
    }
    return GradInstance{{p}, [=] { return tg::bce_loss(p, y, w); }, nullptr};
  });
  return cases;
}

namespace detail {

inline std::vector<corpus::PairIndex> random_pairs(Rng& rng, std::size_t jobs, std::size_t resumes, std::size_t n) {
  std::vector<corpus::PairIndex> pairs(n);
  for (auto& p : pairs) p = {static_cast<std::size_t>(rng.below(jobs)), jobs + static_cast<std::size_t>(rng.below(resumes))};
  return pairs;
}

inline std::pair<std::vector<double>, std::vector<double>> random_targets(Rng& rng, std::size_t n) {
  std::vector<double> y(n), w(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<double>(rng.below(2));
    w[i] = rng.uniform();
  }
  return {y, w};
}

}  // namespace detail

// Text encoder plus head on a tiny random corpus, loss = weighted BCE.
// Every third instance uses the enhanced head.
inline GradCase text_forward_case() {
  return {"text_forward", [](Rng& rng) {
            struct State {
              corpus::Corpus corpus;
              std::unique_ptr<textmatch::TextMatchModel> model;
            };
            auto st = std::make_shared<State>();
            const std::size_t jobs = random_size(rng, 1, 3), resumes = random_size(rng, 1, 3);
            st->corpus = tiny_corpus(rng, jobs, resumes, 6);
            textmatch::EncoderConfig cfg;
            cfg.vocab_size = st->corpus.vocab.size();
            cfg.dim = 4;
            cfg.heads = random_size(rng, 1, 2);
            cfg.sent_layers = 1;
            cfg.doc_layers = random_size(rng, 1, 2);
            cfg.ffn_mult = 2;
            cfg.max_sentence_len = 5;
            cfg.max_sentences = 3;
            const bool enhanced = rng.below(3) == 0;
            st->model = std::make_unique<textmatch::TextMatchModel>(cfg, enhanced, rng.next());
            if (enhanced) st->model->set_enhancement(random_tensor({jobs + resumes, cfg.dim}, rng, -1, 1, false));
            const auto pairs = detail::random_pairs(rng, jobs, resumes, random_size(rng, 1, 4));
            const auto [y, w] = detail::random_targets(rng, pairs.size());
            const textmatch::TextMatchModel* model = st->model.get();
            const corpus::Corpus* c = &st->corpus;
            return GradInstance{model->parameters(), [=] { return tg::bce_loss(model->forward(*c, pairs), y, w); }, st};
          }};
}

// RGCN plus head on a random typed graph, with free or supplied initial states.
inline GradCase relation_forward_case() {
  return {"relation_forward", [](Rng& rng) {
            struct State {
              relgraph::RelationGraph graph;
              relmatch::RelationAdjacency adj;
              std::unique_ptr<relmatch::RelMatchModel> model;
            };
            const std::size_t nodes = random_size(rng, 2, 7), relations = random_size(rng, 1, 3);
            auto graph = random_graph(rng, nodes, relations, 0.4);
            auto adj = relmatch::RelationAdjacency::build(graph);
            auto st = std::make_shared<State>(State{std::move(graph), std::move(adj), nullptr});
            relmatch::RgcnConfig cfg;
            cfg.dim = random_size(rng, 2, 4);
            cfg.layers = random_size(rng, 1, 2);
            const relmatch::Activation acts[] = {relmatch::Activation::kGelu, relmatch::Activation::kSigmoid,
                                                 relmatch::Activation::kIdentity};
            cfg.activation = acts[rng.below(3)];
            const bool text_init = rng.below(2) == 0;
            st->model = std::make_unique<relmatch::RelMatchModel>(cfg, relations, nodes, text_init, rng.next());
            if (text_init) st->model->set_initial_states(random_tensor({nodes, cfg.dim}, rng, -1, 1, false));
            std::vector<corpus::PairIndex> pairs(random_size(rng, 1, 5));
            for (auto& p : pairs) p = {static_cast<std::size_t>(rng.below(nodes)), static_cast<std::size_t>(rng.below(nodes))};
            const auto [y, w] = detail::random_targets(rng, pairs.size());
            const relmatch::RelMatchModel* model = st->model.get();
            const relmatch::RelationAdjacency* a = &st->adj;
            return GradInstance{model->parameters(), [=] { return tg::bce_loss(model->forward(*a, pairs), y, w); }, st};
          }};
}

}  // namespace mvcon::testing
