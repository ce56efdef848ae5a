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
#include "mvcon/relmatch.hpp"

#include <cstdio>
#include <fstream>

#include "mvcon/error.hpp"
#include "mvcon/rng.hpp"
#include "mvcon/textmatch.hpp"

namespace mvcon::relmatch {

const char* to_string(Activation a) {
  switch (a) {
    case Activation::kGelu: return "gelu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kIdentity: return "identity";
  }
  return "gelu";
}

Activation parse_activation(const std::string& s) {
  if (s == "gelu") return Activation::kGelu;
  if (s == "sigmoid") return Activation::kSigmoid;
  if (s == "identity") return Activation::kIdentity;
  throw Error(ErrorCode::kInvalidConfig, "unknown activation '" + s + "' (gelu|sigmoid|identity)");
}

Tensor activate(const Tensor& x, Activation a) {
  switch (a) {
    case Activation::kGelu: return tg::gelu(x);
    case Activation::kSigmoid: return tg::sigmoid(x);
    case Activation::kIdentity: return x;
  }
  return x;
}

void RgcnConfig::validate() const {
  if (dim == 0) throw Error(ErrorCode::kInvalidConfig, "rgcn: dim must be >= 1");
  if (layers == 0) throw Error(ErrorCode::kInvalidConfig, "rgcn: layers must be >= 1");
}

RelationAdjacency RelationAdjacency::build(const relgraph::RelationGraph& graph) {
  RelationAdjacency adj;
  adj.node_count = graph.node_count();
  adj.rows.resize(graph.relation_count());
  adj.mean.resize(graph.relation_count());
  for (std::size_t t = 0; t < graph.relation_count(); ++t) {
    tg::SparseRows& m = adj.mean[t];
    m.cols = adj.node_count;
    for (std::size_t v = 0; v < adj.node_count; ++v) {
      const auto nb = graph.neighbors(v, t);
      if (nb.empty()) continue;
      adj.rows[t].push_back(v);
      const double inv = 1.0 / static_cast<double>(nb.size());
      for (std::size_t u : nb) {
        m.col.push_back(u);
        m.val.push_back(inv);
      }
      m.row_ptr.push_back(m.col.size());
    }
  }
  return adj;
}

Tensor rgcn_layer(const Tensor& states, const RelationAdjacency& adj, const RgcnLayerParams& params,
                  Activation activation) {
  if (states.rows() != adj.node_count) {
    throw Error(ErrorCode::kShapeMismatch, "rgcn_layer: states " + states.shape().str() + " for " +
                                               std::to_string(adj.node_count) + " nodes");
  }
  if (params.relation.size() != adj.relation_count()) {
    throw Error(ErrorCode::kShapeMismatch, "rgcn_layer: " + std::to_string(params.relation.size()) +
                                               " relation matrices for " +
                                               std::to_string(adj.relation_count()) + " relations");
  }
  std::vector<Tensor> terms;
  terms.push_back(tg::matmul(states, params.self));
  for (std::size_t t = 0; t < adj.relation_count(); ++t) {
    if (adj.rows[t].empty()) continue;
    const Tensor agg = tg::matmul(tg::spmm(adj.mean[t], states), params.relation[t]);
    terms.push_back(tg::scatter_rows(agg, adj.rows[t], adj.node_count));
  }
  return activate(tg::add_n(terms), activation);
}

Tensor match_relation(const Tensor& n_job, const Tensor& n_resume, const Tensor& w, const Tensor& b) {
  if (n_job.shape() != n_resume.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                "match_relation: job " + n_job.shape().str() + " vs resume " + n_resume.shape().str());
  }
  if (w.rows() != 2 * n_job.cols() || w.cols() != 1 || b.shape() != tg::Shape{1, 1}) {
    throw Error(ErrorCode::kShapeMismatch, "match_relation: head " + w.shape().str() + " for inputs of width " +
                                               std::to_string(n_job.cols()));
  }
  return tg::sigmoid(tg::add_row(tg::matmul(tg::concat(n_job, n_resume), w), b));
}

Tensor init_nodes(const relgraph::RelationGraph& graph, const Tensor& text_reps) {
  if (!text_reps.defined() || text_reps.rows() != graph.node_count()) {
    throw Error(ErrorCode::kMissingInput,
                "init_nodes: text representations must cover all " + std::to_string(graph.node_count()) + " nodes");
  }
  return text_reps.detach();
}

RelMatchModel::RelMatchModel(const RgcnConfig& cfg, std::size_t relation_count, std::size_t node_count,
                             bool text_initialized, std::uint64_t seed)
    : cfg_(cfg), relation_count_(relation_count), node_count_(node_count), text_initialized_(text_initialized) {
  cfg_.validate();
  Rng rng(seed);
  const std::size_t d = cfg_.dim;
  if (!text_initialized_) initial_ = textmatch::init_uniform({node_count_, d}, d, rng);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    RgcnLayerParams p;
    for (std::size_t t = 0; t < relation_count_; ++t) p.relation.push_back(textmatch::init_uniform({d, d}, d, rng));
    p.self = textmatch::init_uniform({d, d}, d, rng);
    layers_.push_back(std::move(p));
  }
  w2_ = textmatch::init_uniform({2 * d, 1}, 2 * d, rng);
  b2_ = Tensor::zeros({1, 1}, true);
}

void RelMatchModel::set_initial_states(const Tensor& states) {
  if (!text_initialized_) {
    throw Error(ErrorCode::kInvalidConfig, "relation model uses free embeddings; initial states are learned");
  }
  if (states.rows() != node_count_ || states.cols() != cfg_.dim) {
    throw Error(ErrorCode::kShapeMismatch, "set_initial_states: " + states.shape().str() + " for " +
                                               std::to_string(node_count_) + " nodes of width " +
                                               std::to_string(cfg_.dim));
  }
  initial_ = states.detach();
}

std::vector<Tensor> RelMatchModel::propagate(const RelationAdjacency& adj) const {
  if (!initial_.defined()) {
    throw Error(ErrorCode::kMissingInput, "relation model: text-initialised states were not supplied");
  }
  if (adj.node_count != node_count_ || adj.relation_count() != relation_count_) {
    throw Error(ErrorCode::kShapeMismatch, "relation model: graph does not match the model's nodes/relations");
  }
  std::vector<Tensor> out{initial_};
  for (const auto& p : layers_) out.push_back(rgcn_layer(out.back(), adj, p, cfg_.activation));
  return out;
}

Tensor RelMatchModel::final_states(const RelationAdjacency& adj) const { return propagate(adj).back(); }

Tensor RelMatchModel::forward(const RelationAdjacency& adj, std::span<const corpus::PairIndex> pairs) const {
  if (pairs.empty()) throw Error(ErrorCode::kShapeMismatch, "relation forward: empty batch");
  std::vector<std::size_t> jobs, resumes;
  for (const auto& p : pairs) {
    if (p.job >= node_count_ || p.resume >= node_count_) {
      throw Error(ErrorCode::kMissingInput, "relation forward: node index outside the graph");
    }
    jobs.push_back(p.job);
    resumes.push_back(p.resume);
  }
  const Tensor n = final_states(adj);
  return match_relation(tg::gather_rows(n, jobs), tg::gather_rows(n, resumes), w2_, b2_);
}

tg::NamedTensors RelMatchModel::named_parameters() const {
  tg::NamedTensors out;
  if (!text_initialized_) out.emplace_back("rgcn.nodes", initial_);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string pre = "rgcn.l" + std::to_string(l) + ".";
    for (std::size_t t = 0; t < layers_[l].relation.size(); ++t) {
      out.emplace_back(pre + "rel" + std::to_string(t), layers_[l].relation[t]);
    }
    out.emplace_back(pre + "self", layers_[l].self);
  }
  out.emplace_back("head.w", w2_);
  out.emplace_back("head.b", b2_);
  return out;
}

std::vector<Tensor> RelMatchModel::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

void write_node_states(const std::filesystem::path& path, const relgraph::RelationGraph& graph,
                       const Tensor& states) {
  if (states.rows() != graph.node_count()) {
    throw Error(ErrorCode::kShapeMismatch, "write_node_states: states do not cover the graph");
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "node";
  for (std::size_t c = 0; c < states.cols(); ++c) out << ",v" << c;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < states.rows(); ++r) {
    out << graph.node_ids()[r];
    for (std::size_t c = 0; c < states.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", states.at(r, c));
      out << ',' << buf;
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace mvcon::relmatch
