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
#include "mvcon/textmatch.hpp"

#include <cmath>
#include <map>
#include <numeric>

#include "mvcon/error.hpp"

namespace mvcon::textmatch {

using tg::Shape;

void EncoderConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); };
  if (vocab_size == 0) fail("encoder: vocab_size must be >= 1");
  if (dim == 0 || heads == 0) fail("encoder: dim and heads must be >= 1");
  if (dim % heads != 0) {
    fail("encoder: dim " + std::to_string(dim) + " is not divisible by heads " + std::to_string(heads));
  }
  if (sent_layers == 0) fail("encoder: sent_layers must be >= 1");
  if (doc_layers == 0) fail("encoder: doc_layers must be >= 1");
  if (ffn_mult == 0) fail("encoder: ffn_mult must be >= 1");
  if (max_sentence_len == 0 || max_sentences == 0) fail("encoder: length caps must be >= 1");
}

Tensor init_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(shape.size());
  for (double& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from(shape, std::move(v), true);
}

BlockParams BlockParams::init(std::size_t dim, std::size_t ffn_dim, Rng& rng) {
  BlockParams p;
  p.wq = init_uniform({dim, dim}, dim, rng);
  p.bq = Tensor::zeros({1, dim}, true);
  p.wk = init_uniform({dim, dim}, dim, rng);
  p.bk = Tensor::zeros({1, dim}, true);
  p.wv = init_uniform({dim, dim}, dim, rng);
  p.bv = Tensor::zeros({1, dim}, true);
  p.wo = init_uniform({dim, dim}, dim, rng);
  p.bo = Tensor::zeros({1, dim}, true);
  p.ln1_gain = Tensor::filled({1, dim}, 1.0, true);
  p.ln1_bias = Tensor::zeros({1, dim}, true);
  p.ff1_w = init_uniform({dim, ffn_dim}, dim, rng);
  p.ff1_b = Tensor::zeros({1, ffn_dim}, true);
  p.ff2_w = init_uniform({ffn_dim, dim}, ffn_dim, rng);
  p.ff2_b = Tensor::zeros({1, dim}, true);
  p.ln2_gain = Tensor::filled({1, dim}, 1.0, true);
  p.ln2_bias = Tensor::zeros({1, dim}, true);
  return p;
}

void BlockParams::append_named(const std::string& prefix, tg::NamedTensors& out) const {
  const std::pair<const char*, const Tensor*> items[] = {
      {"wq", &wq},       {"bq", &bq},       {"wk", &wk},       {"bk", &bk},
      {"wv", &wv},       {"bv", &bv},       {"wo", &wo},       {"bo", &bo},
      {"ln1.g", &ln1_gain}, {"ln1.b", &ln1_bias}, {"ff1.w", &ff1_w}, {"ff1.b", &ff1_b},
      {"ff2.w", &ff2_w}, {"ff2.b", &ff2_b}, {"ln2.g", &ln2_gain}, {"ln2.b", &ln2_bias},
  };
  for (const auto& [name, t] : items) out.emplace_back(prefix + name, *t);
}

Tensor multi_head_attention(const Tensor& x, const BlockParams& p, std::size_t heads,
                            std::span<const std::size_t> offsets) {
  const std::size_t whole[2] = {0, x.rows()};
  if (offsets.empty()) offsets = whole;
  const Tensor q = tg::add_row(tg::matmul(x, p.wq), p.bq);
  const Tensor k = tg::add_row(tg::matmul(x, p.wk), p.bk);
  const Tensor v = tg::add_row(tg::matmul(x, p.wv), p.bv);
  return tg::add_row(tg::matmul(tg::segment_attention(q, k, v, offsets, heads), p.wo), p.bo);
}

Tensor transformer_block(const Tensor& x, const BlockParams& p, std::size_t heads,
                         std::span<const std::size_t> offsets) {
  const Tensor h1 =
      tg::layer_norm(tg::add(x, multi_head_attention(x, p, heads, offsets)), p.ln1_gain, p.ln1_bias);
  const Tensor ff = tg::add_row(
      tg::matmul(tg::gelu(tg::add_row(tg::matmul(h1, p.ff1_w), p.ff1_b)), p.ff2_w), p.ff2_b);
  return tg::layer_norm(tg::add(h1, ff), p.ln2_gain, p.ln2_bias);
}

TextEncoder::TextEncoder(const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t d = cfg_.dim;
  token_embedding_ = init_uniform({cfg_.vocab_size + 1, d}, d, rng);
  position_embedding_ = init_uniform({cfg_.max_sentence_len + 1, d}, d, rng);
  for (std::size_t i = 0; i < cfg_.sent_layers; ++i) {
    sent_blocks_.push_back(BlockParams::init(d, d * cfg_.ffn_mult, rng));
  }
  doc_position_embedding_ = init_uniform({cfg_.max_sentences, d}, d, rng);
  for (std::size_t i = 0; i < cfg_.doc_layers; ++i) {
    doc_blocks_.push_back(BlockParams::init(d, d * cfg_.ffn_mult, rng));
  }
}

Tensor TextEncoder::encode_sentence(std::span<const corpus::TokenId> tokens, bool* truncated) const {
  if (truncated != nullptr) *truncated = tokens.size() > cfg_.max_sentence_len;
  const std::vector<corpus::TokenId> copy(tokens.begin(), tokens.end());
  const std::vector<corpus::TokenId>* one[1] = {&copy};
  return encode_sentences(one);
}

Tensor TextEncoder::encode_sentences(std::span<const std::vector<corpus::TokenId>* const> sentences) const {
  if (sentences.empty()) throw Error(ErrorCode::kShapeMismatch, "encode_sentences: no sentences");
  std::vector<std::size_t> ids, pos, offsets{0}, cls_rows;
  for (const auto* s : sentences) {
    const std::size_t n = std::min(s->size(), cfg_.max_sentence_len);
    cls_rows.push_back(ids.size());
    ids.push_back(cls_id());
    pos.push_back(0);
    for (std::size_t i = 0; i < n; ++i) {
      const corpus::TokenId t = (*s)[i];
      if (t >= cfg_.vocab_size) {
        throw Error(ErrorCode::kShapeMismatch, "encode_sentence: token id " + std::to_string(t) +
                                                   " outside vocabulary of " + std::to_string(cfg_.vocab_size));
      }
      ids.push_back(t);
      pos.push_back(i + 1);
    }
    offsets.push_back(ids.size());
  }
  Tensor h = tg::add(tg::embedding_lookup(token_embedding_, ids), tg::embedding_lookup(position_embedding_, pos));
  for (const BlockParams& b : sent_blocks_) h = transformer_block(h, b, cfg_.heads, offsets);
  return tg::gather_rows(h, cls_rows);
}

Tensor TextEncoder::encode_document(std::span<const Tensor> sentence_vectors) const {
  if (sentence_vectors.empty()) throw Error(ErrorCode::kShapeMismatch, "encode_document: no sentences");
  const std::size_t offsets[2] = {0, sentence_vectors.size()};
  return encode_documents(tg::stack_rows(sentence_vectors), offsets);
}

Tensor TextEncoder::encode_documents(const Tensor& sentences, std::span<const std::size_t> doc_offsets) const {
  if (doc_offsets.size() < 2) throw Error(ErrorCode::kShapeMismatch, "encode_document: no documents");
  std::vector<std::size_t> pos;
  pos.reserve(sentences.rows());
  for (std::size_t d = 0; d + 1 < doc_offsets.size(); ++d) {
    const std::size_t n = doc_offsets[d + 1] - doc_offsets[d];
    if (n == 0) throw Error(ErrorCode::kShapeMismatch, "encode_document: no sentences");
    if (n > cfg_.max_sentences) {
      throw Error(ErrorCode::kShapeMismatch, "encode_document: " + std::to_string(n) +
                                                 " sentences exceed the cap of " +
                                                 std::to_string(cfg_.max_sentences));
    }
    for (std::size_t i = 0; i < n; ++i) pos.push_back(i);
  }
  if (pos.size() != sentences.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "encode_document: offsets do not cover " + sentences.shape().str());
  }
  Tensor h = tg::add(sentences, tg::embedding_lookup(doc_position_embedding_, pos));
  for (const BlockParams& b : doc_blocks_) h = transformer_block(h, b, cfg_.heads, doc_offsets);
  return tg::segment_mean(h, doc_offsets);
}

Tensor TextEncoder::encode(const corpus::Document& doc) const {
  std::vector<const std::vector<corpus::TokenId>*> sents;
  for (const auto& s : doc.sentences()) sents.push_back(&s);
  const std::size_t offsets[2] = {0, sents.size()};
  return encode_documents(encode_sentences(sents), offsets);
}

void TextEncoder::append_named(tg::NamedTensors& out) const {
  out.emplace_back("enc.tok", token_embedding_);
  out.emplace_back("enc.pos", position_embedding_);
  for (std::size_t i = 0; i < sent_blocks_.size(); ++i) {
    sent_blocks_[i].append_named("enc.sent" + std::to_string(i) + ".", out);
  }
  out.emplace_back("enc.docpos", doc_position_embedding_);
  for (std::size_t i = 0; i < doc_blocks_.size(); ++i) {
    doc_blocks_[i].append_named("enc.doc" + std::to_string(i) + ".", out);
  }
}

Tensor match_text(const Tensor& h_job, const Tensor& h_resume, const Tensor& w, const Tensor& b) {
  if (h_job.shape() != h_resume.shape()) {
    throw Error(ErrorCode::kShapeMismatch,
                "match_text: job " + h_job.shape().str() + " vs resume " + h_resume.shape().str());
  }
  if (w.rows() != 2 * h_job.cols() || w.cols() != 1 || b.shape() != Shape{1, 1}) {
    throw Error(ErrorCode::kShapeMismatch, "match_text: head " + w.shape().str() + " + bias " +
                                               b.shape().str() + " for inputs of width " +
                                               std::to_string(h_job.cols()));
  }
  return tg::sigmoid(tg::add_row(tg::matmul(tg::concat(h_job, h_resume), w), b));
}

Tensor enhance_concat(const Tensor& h, const Tensor& n) {
  if (h.shape() != n.shape()) {
    throw Error(ErrorCode::kShapeMismatch, "enhance_concat: " + h.shape().str() + " vs " + n.shape().str());
  }
  return tg::concat(h, n);
}

TextMatchModel::TextMatchModel(const EncoderConfig& cfg, bool enhanced, std::uint64_t seed)
    : TextMatchModel(cfg, enhanced, Rng(seed)) {}

TextMatchModel::TextMatchModel(const EncoderConfig& cfg, bool enhanced, Rng rng)
    : encoder_(cfg, rng), enhanced_(enhanced) {
  const std::size_t width = (enhanced ? 4 : 2) * cfg.dim;
  w1_ = init_uniform({width, 1}, width, rng);
  b1_ = Tensor::zeros({1, 1}, true);
}

void TextMatchModel::set_enhancement(Tensor node_states) {
  if (node_states.cols() != encoder_.config().dim) {
    throw Error(ErrorCode::kShapeMismatch, "set_enhancement: states " + node_states.shape().str() +
                                               " do not have width " +
                                               std::to_string(encoder_.config().dim));
  }
  enhancement_ = node_states.detach();
}

Tensor TextMatchModel::encode_docs(const corpus::Corpus& corpus, std::span<const std::size_t> docs) const {
  std::map<std::vector<corpus::TokenId>, std::size_t> sentence_row;
  std::vector<const std::vector<corpus::TokenId>*> unique;
  std::vector<std::size_t> rows, offsets{0};
  for (std::size_t d : docs) {
    if (d >= corpus.documents.size()) {
      throw Error(ErrorCode::kMissingInput, "text encoder: document index " + std::to_string(d) + " out of range");
    }
    for (const auto& s : corpus.documents[d].sentences()) {
      const auto [it, fresh] = sentence_row.emplace(s, unique.size());
      if (fresh) unique.push_back(&s);
      rows.push_back(it->second);
    }
    offsets.push_back(rows.size());
  }
  const Tensor sent = encoder_.encode_sentences(unique);
  return encoder_.encode_documents(tg::gather_rows(sent, rows), offsets);
}

Tensor TextMatchModel::forward(const corpus::Corpus& corpus, std::span<const corpus::PairIndex> pairs) const {
  if (pairs.empty()) throw Error(ErrorCode::kShapeMismatch, "text forward: empty batch");
  if (enhanced_ && !enhancement_.defined()) {
    throw Error(ErrorCode::kMissingInput, "text forward: enhancement enabled but no node states supplied");
  }
  // Distinct documents in first-appearance order.
  std::map<std::size_t, std::size_t> slot;
  std::vector<std::size_t> docs;
  for (const auto& p : pairs) {
    for (std::size_t d : {p.job, p.resume}) {
      if (slot.emplace(d, docs.size()).second) docs.push_back(d);
    }
  }
  const Tensor all = encode_docs(corpus, docs);
  std::vector<std::size_t> job_rows, resume_rows, job_docs, resume_docs;
  for (const auto& p : pairs) {
    job_rows.push_back(slot.at(p.job));
    resume_rows.push_back(slot.at(p.resume));
    job_docs.push_back(p.job);
    resume_docs.push_back(p.resume);
  }
  Tensor hj = tg::gather_rows(all, job_rows);
  Tensor hr = tg::gather_rows(all, resume_rows);
  if (enhanced_) {
    if (enhancement_.rows() != corpus.documents.size()) {
      throw Error(ErrorCode::kShapeMismatch, "text forward: node states " + enhancement_.shape().str() +
                                                 " do not cover " + std::to_string(corpus.documents.size()) +
                                                 " documents");
    }
    hj = enhance_concat(hj, tg::gather_rows(enhancement_, job_docs));
    hr = enhance_concat(hr, tg::gather_rows(enhancement_, resume_docs));
  }
  return match_text(hj, hr, w1_, b1_);
}

Tensor TextMatchModel::encode_all(const corpus::Corpus& corpus) const {
  tg::NoGrad no_grad;
  std::vector<std::size_t> docs(corpus.documents.size());
  std::iota(docs.begin(), docs.end(), std::size_t{0});
  return encode_docs(corpus, docs).detach();
}

tg::NamedTensors TextMatchModel::named_parameters() const {
  tg::NamedTensors out;
  encoder_.append_named(out);
  out.emplace_back("head.w", w1_);
  out.emplace_back("head.b", b1_);
  return out;
}

std::vector<Tensor> TextMatchModel::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

}  // namespace mvcon::textmatch
