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

// Job-resume relation graph: keyword extraction (tf-idf candidates ranked by
// PageRank over a document co-occurrence graph) and typed link creation.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvcon/corpus.hpp"

namespace mvcon::relgraph {

struct KeywordConfig {
  std::size_t candidate_count = 500;
  std::size_t top_k = 50;
  double max_df_fraction = 0.2;
  double damping = 0.85;
  double tolerance = 1e-8;
  std::size_t max_iterations = 100;

  void validate() const;
};

struct WordScore {
  std::string word;
  double score = 0.0;
};

/// One bag of lower-cased words per document.
using WordDocs = std::vector<std::vector<std::string>>;

WordDocs document_words(const corpus::Corpus& corpus);

/// score(w) = max_d tf(w,d) * ln(N / df(w)); words with df/N > max_df_fraction
/// are dropped. Sorted by score descending, ties by word.
std::vector<WordScore> tfidf_candidates(const WordDocs& docs, const KeywordConfig& cfg);

struct WordGraph {
  std::vector<std::string> words;
  // Symmetric weighted adjacency, neighbours sorted by index.
  std::vector<std::vector<std::pair<std::size_t, double>>> adjacency;

  double weight(std::size_t a, std::size_t b) const;
  std::size_t edge_count() const;
};

/// Edge weight = number of documents containing both words.
WordGraph cooccurrence_graph(const WordDocs& docs, std::span<const std::string> candidates);

struct PageRankResult {
  std::vector<double> scores;  // aligned with WordGraph::words
  std::size_t iterations = 0;
  bool converged = false;
};

PageRankResult pagerank(const WordGraph& graph, const KeywordConfig& cfg);

/// Top `k` words by score, ties broken lexicographically.
std::vector<std::string> select_keywords(const std::vector<WordScore>& scores, std::size_t k);

struct KeywordReport {
  std::vector<WordScore> candidates;   // tf-idf, in candidate order
  std::vector<double> pagerank;        // aligned with candidates
  std::vector<std::string> keywords;
  bool pagerank_converged = false;
};

KeywordReport extract_keywords(const WordDocs& docs, const KeywordConfig& cfg);

enum class RelationKind { kCategory, kKeyword, kMatched };

struct RelationType {
  RelationKind kind = RelationKind::kMatched;
  std::string name;  // category label or keyword; empty for matched

  std::string str() const;  // "category:<label>", "keyword:<word>", "matched"
  static RelationType parse(const std::string& s);
  bool operator==(const RelationType&) const = default;
};

class RelationGraph {
 public:
  RelationGraph(std::vector<std::string> node_ids, std::vector<corpus::DocKind> kinds,
                std::vector<RelationType> relations);

  std::size_t node_count() const { return node_ids_.size(); }
  std::size_t relation_count() const { return relations_.size(); }
  const std::vector<std::string>& node_ids() const { return node_ids_; }
  corpus::DocKind kind(std::size_t node) const { return kinds_[node]; }
  const std::vector<RelationType>& relations() const { return relations_; }
  std::size_t relation_index(const RelationType& r) const;
  std::size_t node_index(const std::string& id) const;

  /// Adds an undirected edge; self-loops and duplicates are ignored.
  void add_edge(std::size_t a, std::size_t b, std::size_t relation);

  std::span<const std::size_t> neighbors(std::size_t node, std::size_t relation) const {
    return adjacency_[relation][node];
  }

  struct Edge {
    std::size_t src, dst, relation;
  };
  /// Each undirected edge once with src < dst, ordered by (relation, src, dst).
  std::vector<Edge> edges() const;
  std::size_t edge_count(std::size_t relation) const;

 private:
  std::vector<std::string> node_ids_;
  std::vector<corpus::DocKind> kinds_;
  std::vector<RelationType> relations_;
  std::vector<std::vector<std::vector<std::size_t>>> adjacency_;  // [relation][node]
};

struct GraphOptions {
  bool matched_edges = true;
};

/// Category links join same-kind documents with equal labels; keyword links
/// join any two documents containing the keyword; matched links join the
/// job and resume of every training positive.
RelationGraph build_graph(const corpus::Corpus& corpus, const std::vector<std::string>& keywords,
                          const std::vector<corpus::LabeledPair>& train_positive_pairs,
                          const GraphOptions& options = {});

// First line: {"format":"mvcon.edges","version":1,"seed":S,"nodes":[...],"relations":[...]},
// then one {"src","dst","relation"} object per undirected edge.
void write_edges(const std::filesystem::path& path, const RelationGraph& graph, std::uint64_t seed);
RelationGraph read_edges(const std::filesystem::path& path, const corpus::Corpus& corpus);

/// CSV: word,tfidf,pagerank,selected
void write_keyword_report(const std::filesystem::path& path, const KeywordReport& report);

}  // namespace mvcon::relgraph
