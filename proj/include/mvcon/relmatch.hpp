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

// Relation-based matcher: relational graph convolution over the typed
// job-resume graph and a sigmoid head over the final node states.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvcon/checkpoint.hpp"
#include "mvcon/corpus.hpp"
#include "mvcon/relgraph.hpp"
#include "mvcon/tensor.hpp"

namespace mvcon::relmatch {

using tg::Tensor;

enum class Activation { kGelu, kSigmoid, kIdentity };

const char* to_string(Activation a);
Activation parse_activation(const std::string& s);
Tensor activate(const Tensor& x, Activation a);

struct RgcnConfig {
  std::size_t dim = 32;
  std::size_t layers = 2;
  Activation activation = Activation::kGelu;

  void validate() const;
};

/// Row-normalised neighbourhood matrices, one per relation. Only nodes with
/// at least one neighbour under a relation appear in its `rows` list.
struct RelationAdjacency {
  std::size_t node_count = 0;
  std::vector<std::vector<std::size_t>> rows;  // [relation] -> node indices
  std::vector<tg::SparseRows> mean;            // [relation] -> |rows| x node_count

  static RelationAdjacency build(const relgraph::RelationGraph& graph);
  std::size_t relation_count() const { return mean.size(); }
};

struct RgcnLayerParams {
  std::vector<Tensor> relation;  // W_t, D x D each
  Tensor self;                   // W_o, D x D
};

/// act( sum_t mean_{v' in N_t(v)} n_{v'} W_t + n_v W_o ). Relations with no
/// neighbours for v contribute nothing.
Tensor rgcn_layer(const Tensor& states, const RelationAdjacency& adj, const RgcnLayerParams& params,
                  Activation activation);

/// sigma(W [n_j ; n_r] + b), row-wise.
Tensor match_relation(const Tensor& n_job, const Tensor& n_resume, const Tensor& w, const Tensor& b);

/// Layer-0 states copied from text representations (no gradient linkage).
Tensor init_nodes(const relgraph::RelationGraph& graph, const Tensor& text_reps);

class RelMatchModel {
 public:
  /// With `text_initialized` the layer-0 states must be supplied through
  /// set_initial_states; otherwise a learned free embedding table is used.
  RelMatchModel(const RgcnConfig& cfg, std::size_t relation_count, std::size_t node_count,
                bool text_initialized, std::uint64_t seed);

  const RgcnConfig& config() const { return cfg_; }
  bool text_initialized() const { return text_initialized_; }
  std::size_t node_count() const { return node_count_; }

  void set_initial_states(const Tensor& states);
  const Tensor& initial_states() const { return initial_; }

  /// States of every layer 0..L'.
  std::vector<Tensor> propagate(const RelationAdjacency& adj) const;
  Tensor final_states(const RelationAdjacency& adj) const;

  Tensor forward(const RelationAdjacency& adj, std::span<const corpus::PairIndex> pairs) const;

  tg::NamedTensors named_parameters() const;
  std::vector<Tensor> parameters() const;

 private:
  RgcnConfig cfg_;
  std::size_t relation_count_;
  std::size_t node_count_;
  bool text_initialized_;
  Tensor initial_;  // free table, or the supplied constant states
  std::vector<RgcnLayerParams> layers_;
  Tensor w2_, b2_;
};

/// CSV: node,v0..v{D-1}
void write_node_states(const std::filesystem::path& path, const relgraph::RelationGraph& graph,
                       const Tensor& states);

}  // namespace mvcon::relmatch
