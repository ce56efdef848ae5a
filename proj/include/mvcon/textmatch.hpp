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

// Text-based matcher. A sentence encoder (CLS + token/position embeddings
// through bidirectional self-attention blocks) feeds a document encoder of
// post-norm Transformer blocks over sentence vectors; a sigmoid head scores
// the concatenated job and resume vectors.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvcon/checkpoint.hpp"
#include "mvcon/corpus.hpp"
#include "mvcon/rng.hpp"
#include "mvcon/tensor.hpp"

namespace mvcon::textmatch {

using tg::Tensor;

struct EncoderConfig {
  std::size_t vocab_size = 0;  // including the OOV id 0
  std::size_t dim = 32;
  std::size_t heads = 2;
  std::size_t sent_layers = 2;
  std::size_t doc_layers = 2;
  std::size_t ffn_mult = 4;
  std::size_t max_sentence_len = corpus::kMaxSentenceLen;
  std::size_t max_sentences = corpus::kMaxSentences;

  void validate() const;
};

/// One post-norm Transformer block:
///   h~ = LN(x + MHAtt(x)),  out = LN(h~ + FFN(h~)),  FFN = W2 gelu(W1 h + b1) + b2.
struct BlockParams {
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln1_gain, ln1_bias;
  Tensor ff1_w, ff1_b, ff2_w, ff2_b;
  Tensor ln2_gain, ln2_bias;

  static BlockParams init(std::size_t dim, std::size_t ffn_dim, Rng& rng);
  void append_named(const std::string& prefix, tg::NamedTensors& out) const;
};

/// Self-attention over x; with `offsets`, each row block is its own sequence.
Tensor multi_head_attention(const Tensor& x, const BlockParams& p, std::size_t heads,
                            std::span<const std::size_t> offsets = {});
Tensor transformer_block(const Tensor& x, const BlockParams& p, std::size_t heads,
                         std::span<const std::size_t> offsets = {});

/// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) leaf parameter.
Tensor init_uniform(tg::Shape shape, std::size_t fan_in, Rng& rng);

class TextEncoder {
 public:
  TextEncoder(const EncoderConfig& cfg, Rng& rng);

  const EncoderConfig& config() const { return cfg_; }

  /// 1 x D vector: the final state of the CLS position. Inputs longer than
  /// max_sentence_len are truncated and `truncated` (if given) is set.
  Tensor encode_sentence(std::span<const corpus::TokenId> tokens, bool* truncated = nullptr) const;

  /// 1 x D: mean over the final-layer sentence positions.
  Tensor encode_document(std::span<const Tensor> sentence_vectors) const;

  Tensor encode(const corpus::Document& doc) const;

  /// Packed forms: one row per sentence, and one row per document where
  /// document d owns rows [doc_offsets[d], doc_offsets[d+1]) of `sentences`.
  Tensor encode_sentences(std::span<const std::vector<corpus::TokenId>* const> sentences) const;
  Tensor encode_documents(const Tensor& sentences, std::span<const std::size_t> doc_offsets) const;

  void append_named(tg::NamedTensors& out) const;

  std::size_t cls_id() const { return cfg_.vocab_size; }

 private:
  EncoderConfig cfg_;
  Tensor token_embedding_;     // (vocab + 1) x D, last row is CLS
  Tensor position_embedding_;  // (max_sentence_len + 1) x D
  std::vector<BlockParams> sent_blocks_;
  Tensor doc_position_embedding_;  // max_sentences x D
  std::vector<BlockParams> doc_blocks_;
};

/// sigma(W [h_j ; h_r] + b), row-wise. h_j and h_r are n x w, W is 2w x 1.
Tensor match_text(const Tensor& h_job, const Tensor& h_resume, const Tensor& w, const Tensor& b);

/// h (+) n along the last axis.
Tensor enhance_concat(const Tensor& h, const Tensor& n);

class TextMatchModel {
 public:
  TextMatchModel(const EncoderConfig& cfg, bool enhanced, std::uint64_t seed);

  bool enhanced() const { return enhanced_; }
  const TextEncoder& encoder() const { return encoder_; }
  std::size_t head_width() const { return w1_.rows(); }

  /// Supplies the relation-based node vectors (N x D, no gradient) that are
  /// concatenated onto the document vectors when enhancement is on.
  void set_enhancement(Tensor node_states);
  const Tensor& enhancement() const { return enhancement_; }

  /// n x 1 predictions. Each distinct sentence and document in the batch is
  /// encoded once.
  Tensor forward(const corpus::Corpus& corpus, std::span<const corpus::PairIndex> pairs) const;

  /// Document vectors for every corpus document (N x D), without gradient.
  Tensor encode_all(const corpus::Corpus& corpus) const;

  /// Document vectors (one row per index), each distinct sentence encoded once.
  Tensor encode_docs(const corpus::Corpus& corpus, std::span<const std::size_t> docs) const;

  tg::NamedTensors named_parameters() const;
  std::vector<Tensor> parameters() const;

 private:
  TextMatchModel(const EncoderConfig& cfg, bool enhanced, Rng rng);

  TextEncoder encoder_;
  bool enhanced_;
  Tensor w1_, b1_;
  Tensor enhancement_;
};

}  // namespace mvcon::textmatch
