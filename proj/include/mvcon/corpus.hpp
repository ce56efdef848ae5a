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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mvcon/rng.hpp"

namespace mvcon::corpus {

using TokenId = std::uint32_t;

inline constexpr TokenId kOovToken = 0;
inline constexpr std::size_t kMaxSentences = 16;
inline constexpr std::size_t kMaxSentenceLen = 32;

enum class DocKind { kJob, kResume };
enum class Label { kNoMatch, kMatch };
enum class Provenance { kExplicitAccept, kExplicitReject, kSampledClicking, kSampledBrowsing };

const char* to_string(DocKind kind);
const char* to_string(Label label);
const char* to_string(Provenance provenance);
DocKind parse_doc_kind(std::string_view s);
Label parse_label(std::string_view s);
Provenance parse_provenance(std::string_view s);

inline bool is_explicit(Provenance p) {
  return p == Provenance::kExplicitAccept || p == Provenance::kExplicitReject;
}
inline bool is_sampled(Provenance p) { return !is_explicit(p); }

/// Lower-cased words; whitespace and ASCII punctuation are separators.
std::vector<std::string> split_words(std::string_view text);

/// Sentence boundaries are '.', '!', '?', ';' and newlines. Empty pieces are dropped.
std::vector<std::string> split_sentences(std::string_view text);

class Vocabulary {
 public:
  Vocabulary();  // just the OOV entry

  /// Every distinct word of `texts` (min frequency 1), ids in lexicographic order from 1.
  static Vocabulary build(const std::vector<std::string>& texts);
  static Vocabulary from_words(std::vector<std::string> words_without_oov);

  TokenId id(std::string_view word) const;
  const std::string& word(TokenId id) const { return words_.at(id); }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab);

class Document {
 public:
  Document(std::string id, DocKind kind, std::string category,
           std::vector<std::vector<TokenId>> sentences, std::string raw_text);

  /// Sentence-splits and tokenizes `raw_text`, applying the length caps.
  static Document from_text(std::string id, DocKind kind, std::string category,
                            std::string raw_text, const Vocabulary& vocab);

  const std::string& id() const { return id_; }
  DocKind kind() const { return kind_; }
  const std::string& category() const { return category_; }
  const std::vector<std::vector<TokenId>>& sentences() const { return sentences_; }
  const std::string& raw_text() const { return raw_text_; }
  bool truncated() const { return truncated_; }

  /// Throws if a token id is outside the vocabulary.
  void validate(std::size_t vocab_size) const;

 private:
  std::string id_;
  DocKind kind_;
  std::string category_;
  std::vector<std::vector<TokenId>> sentences_;
  std::string raw_text_;
  bool truncated_ = false;
};

struct LabeledPair {
  std::string job_id;
  std::string resume_id;
  Label label = Label::kNoMatch;
  Provenance provenance = Provenance::kExplicitReject;
  std::optional<Label> hidden_truth;

  bool consistent() const;
};

/// Throws unless the provenance/label coupling holds.
void validate_pair(const LabeledPair& pair);

struct SynthConfig {
  std::size_t n_jobs = 200;
  std::size_t n_resumes = 300;
  std::size_t n_categories = 4;
  std::size_t skill_vocab_size = 40;
  std::size_t skills_per_doc = 5;  // each document draws 1..skills_per_doc skills
  std::size_t n_accepts = 500;
  double reject_ratio = 0.25;       // explicit rejects per accept
  double false_negative_rate = 0.3;
  double neg_pos_ratio = 1.0;
  std::size_t overlap_threshold = 2;
  std::uint64_t seed = 1;

  void validate() const;
};

/// A loaded or generated corpus. Node order is documents order.
struct Corpus {
  std::uint64_t seed = 0;
  Vocabulary vocab;
  std::vector<Document> documents;
  std::vector<LabeledPair> pairs;

  std::size_t index_of(const std::string& doc_id) const;
  bool contains(const std::string& doc_id) const;
  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> doc_index_;
};

struct SyntheticCorpus {
  Corpus corpus;
  /// Planted skills per document (ground truth; not part of the document).
  std::vector<std::vector<std::string>> skills;
  std::size_t true_match_count = 0;
};

/// A (job, resume) pair resolved to document indices.
struct PairIndex {
  std::size_t job = 0;
  std::size_t resume = 0;
};

bool synthetic_match(const SyntheticCorpus& synth, std::size_t job, std::size_t resume,
                     std::size_t overlap_threshold);

SyntheticCorpus generate_synthetic(const SynthConfig& cfg);

/// Draws round(ratio * |positives|) sampled negatives: ceil half from the
/// clicking pool, floor half from the browsing pool, without replacement.
std::vector<LabeledPair> sample_negatives(const std::vector<LabeledPair>& positives,
                                          const std::vector<LabeledPair>& clicking_pool,
                                          const std::vector<LabeledPair>& browsing_pool,
                                          double ratio, Rng& rng);

struct DatasetSplit {
  std::vector<LabeledPair> train, valid, test;
  // Indices into the pair list the split was made from.
  std::vector<std::size_t> train_index, valid_index, test_index;
};

inline constexpr std::array<double, 3> kDefaultSplitFractions{0.8, 0.1, 0.1};

DatasetSplit split(const std::vector<LabeledPair>& pairs, std::array<double, 3> fractions,
                   std::uint64_t seed);

/// Rebuilds a split from a manifest's index lists.
DatasetSplit split_from_indices(const std::vector<LabeledPair>& pairs, std::vector<std::size_t> train,
                                std::vector<std::size_t> valid, std::vector<std::size_t> test);

// JSONL corpus files. The first line of every file is a header object that
// carries the format tag, version and seed.
void write_documents(const std::filesystem::path& path, const Corpus& corpus);
void write_pairs(const std::filesystem::path& path, const Corpus& corpus);
void write_split_manifest(const std::filesystem::path& path, const DatasetSplit& split,
                          std::uint64_t seed);
Corpus read_corpus(const std::filesystem::path& docs_path, const std::filesystem::path& pairs_path);
DatasetSplit read_split_manifest(const std::filesystem::path& path, const Corpus& corpus);

}  // namespace mvcon::corpus
