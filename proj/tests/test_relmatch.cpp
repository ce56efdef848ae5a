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
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "grad_cases.hpp"
#include "mvcon/error.hpp"
#include "mvcon/relmatch.hpp"
#include "support.hpp"

using namespace mvcon;
using namespace mvcon::testing;

TEST_CASE("rgcn layer equals dense per-relation adjacency products") {
  Rng rng(31);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = random_size(rng, 1, 12), r = random_size(rng, 1, 4), d = random_size(rng, 1, 5);
    const auto graph = random_graph(rng, n, r, rng.uniform(0.0, 0.6));
    const auto adj = relmatch::RelationAdjacency::build(graph);
    relmatch::RgcnLayerParams p;
    for (std::size_t i = 0; i < r; ++i) p.relation.push_back(random_tensor({d, d}, rng, -1, 1, false));
    p.self = random_tensor({d, d}, rng, -1, 1, false);
    const Tensor h = random_tensor({n, d}, rng, -1, 1, false);
    const relmatch::Activation acts[] = {relmatch::Activation::kGelu, relmatch::Activation::kSigmoid,
                                         relmatch::Activation::kIdentity};
    const auto act = acts[t % 3];
    const Tensor got = relmatch::rgcn_layer(h, adj, p, act);
    std::vector<Matrix> w;
    for (const auto& m : p.relation) w.push_back(to_matrix(m));
    const Matrix want = dense_rgcn_layer(graph, to_matrix(h), w, to_matrix(p.self), act_ref(act));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) CHECK(std::abs(got.at(i, j) - want[i][j]) < 1e-9);
  }
}

TEST_CASE("adjacency rows are normalised and list only nodes with neighbours") {
  Rng rng(5);
  const auto graph = random_graph(rng, 9, 3, 0.3);
  const auto adj = relmatch::RelationAdjacency::build(graph);
  REQUIRE(adj.relation_count() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    const auto& m = adj.mean[t];
    CHECK(m.rows() == adj.rows[t].size());
    for (std::size_t i = 0; i < m.rows(); ++i) {
      double sum = 0.0;
      for (std::size_t k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) sum += m.val[k];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      CHECK_FALSE(graph.neighbors(adj.rows[t][i], t).empty());
    }
  }
}

TEST_CASE("composed relation forward matches central differences") {
  Rng rng(12);
  const auto c = relation_forward_case();
  for (int i = 0; i < 20; ++i) {
    const auto inst = c.make(rng);
    CHECK(check_gradients(inst.leaves, inst.loss).max_rel_error < 1e-3);
  }
}

TEST_CASE("text-initialised model takes states from outside and has no free table") {
  Rng rng(9);
  const auto graph = random_graph(rng, 6, 2, 0.5);
  const auto adj = relmatch::RelationAdjacency::build(graph);
  relmatch::RgcnConfig cfg;
  cfg.dim = 3;
  relmatch::RelMatchModel free_model(cfg, 2, 6, false, 1);
  relmatch::RelMatchModel text_model(cfg, 2, 6, true, 1);
  CHECK(free_model.named_parameters().front().first == "rgcn.nodes");
  for (const auto& [name, t] : text_model.named_parameters()) CHECK(name != "rgcn.nodes");
  CHECK_THROWS_AS((void)text_model.final_states(adj), Error);
  CHECK_THROWS_AS(free_model.set_initial_states(Tensor::zeros({6, 3})), Error);

  Tensor text = random_tensor({6, 3}, rng);
  text_model.set_initial_states(relmatch::init_nodes(graph, text));
  const std::vector<corpus::PairIndex> pairs{{0, 1}, {2, 3}};
  tg::Tape tape;
  const std::vector<double> y{1.0, 0.0}, w{1.0, 1.0};
  tape.backward(tg::bce_loss(text_model.forward(adj, pairs), y, w));
  CHECK_FALSE(text.has_grad());
  CHECK(text_model.propagate(adj).size() == cfg.layers + 1);
  CHECK_THROWS_AS((void)relmatch::init_nodes(graph, Tensor::zeros({5, 3})), Error);
}

TEST_CASE("activations parse and round-trip") {
  for (auto a : {relmatch::Activation::kGelu, relmatch::Activation::kSigmoid, relmatch::Activation::kIdentity}) {
    CHECK(relmatch::parse_activation(relmatch::to_string(a)) == a);
  }
  CHECK_THROWS_AS((void)relmatch::parse_activation("relu6"), Error);
}

TEST_CASE("node states csv has a header and one row per node") {
  Rng rng(1);
  const auto graph = random_graph(rng, 4, 1, 0.5);
  const auto path = std::filesystem::temp_directory_path() / "mvcon_node_states_test.csv";
  relmatch::write_node_states(path, graph, Tensor::filled({4, 2}, 0.25));
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "node,v0,v1");
  std::getline(in, line);
  CHECK(line == "n0,0.25,0.25");
  std::filesystem::remove(path);
}
