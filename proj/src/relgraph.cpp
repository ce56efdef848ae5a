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
#include "mvcon/relgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "mvcon/error.hpp"

namespace mvcon::relgraph {
namespace {

using nlohmann::json;

bool by_score_then_word(const WordScore& a, const WordScore& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.word < b.word;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void KeywordConfig::validate() const {
  if (!(damping > 0.0 && damping < 1.0)) throw Error(ErrorCode::kInvalidConfig, "damping must lie in (0,1)");
  if (top_k > candidate_count) throw Error(ErrorCode::kInvalidConfig, "top_k must not exceed candidate_count");
  if (!(tolerance > 0.0)) throw Error(ErrorCode::kInvalidConfig, "pagerank tolerance must be > 0");
  if (!(max_df_fraction > 0.0 && max_df_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "max_df_fraction must lie in (0,1]");
  }
}

WordDocs document_words(const corpus::Corpus& corpus) {
  WordDocs out;
  out.reserve(corpus.documents.size());
  for (const auto& d : corpus.documents) {
    if (!d.raw_text().empty()) {
      out.push_back(corpus::split_words(d.raw_text()));
    } else {
      std::vector<std::string> words;
      for (const auto& s : d.sentences())
        for (auto t : s)
          if (t != corpus::kOovToken) words.push_back(corpus.vocab.word(t));
      out.push_back(std::move(words));
    }
  }
  return out;
}

std::vector<WordScore> tfidf_candidates(const WordDocs& docs, const KeywordConfig& cfg) {
  if (docs.empty()) throw Error(ErrorCode::kConstraint, "tfidf_candidates: empty corpus");
  std::map<std::string, std::size_t> df;
  std::map<std::string, std::size_t> max_tf;
  for (const auto& d : docs) {
    std::map<std::string, std::size_t> tf;
    for (const auto& w : d) ++tf[w];
    for (const auto& [w, n] : tf) {
      ++df[w];
      auto& m = max_tf[w];
      m = std::max(m, n);
    }
  }
  const double n_docs = static_cast<double>(docs.size());
  std::vector<WordScore> out;
  for (const auto& [w, f] : df) {
    if (static_cast<double>(f) / n_docs > cfg.max_df_fraction) continue;
    out.push_back({w, static_cast<double>(max_tf[w]) * std::log(n_docs / static_cast<double>(f))});
  }
  std::sort(out.begin(), out.end(), by_score_then_word);
  if (out.size() > cfg.candidate_count) out.resize(cfg.candidate_count);
  return out;
}

double WordGraph::weight(std::size_t a, std::size_t b) const {
  for (const auto& [n, w] : adjacency[a])
    if (n == b) return w;
  return 0.0;
}

std::size_t WordGraph::edge_count() const {
  std::size_t total = 0;
  for (const auto& adj : adjacency) total += adj.size();
  return total / 2;
}

WordGraph cooccurrence_graph(const WordDocs& docs, std::span<const std::string> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::kConstraint, "cooccurrence_graph: no candidates");
  WordGraph g;
  g.words.assign(candidates.begin(), candidates.end());
  g.adjacency.resize(g.words.size());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.words.size(); ++i) index.emplace(g.words[i], i);

  std::map<std::pair<std::size_t, std::size_t>, double> counts;
  for (const auto& d : docs) {
    std::set<std::size_t> present;
    for (const auto& w : d) {
      const auto it = index.find(w);
      if (it != index.end()) present.insert(it->second);
    }
    for (auto a = present.begin(); a != present.end(); ++a)
      for (auto b = std::next(a); b != present.end(); ++b) counts[{*a, *b}] += 1.0;
  }
  for (const auto& [key, w] : counts) {
    g.adjacency[key.first].emplace_back(key.second, w);
    g.adjacency[key.second].emplace_back(key.first, w);
  }
  for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
  return g;
}

PageRankResult pagerank(const WordGraph& graph, const KeywordConfig& cfg) {
  const std::size_t n = graph.words.size();
  if (n == 0) throw Error(ErrorCode::kConstraint, "pagerank: empty graph");
  if (!(cfg.damping > 0.0 && cfg.damping < 1.0)) throw Error(ErrorCode::kInvalidConfig, "damping must lie in (0,1)");
  const double d = cfg.damping;
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> out_weight(n, 0.0);
  for (std::size_t u = 0; u < n; ++u)
    for (const auto& [v, w] : graph.adjacency[u]) out_weight[u] += w;

  PageRankResult res;
  res.scores.assign(n, inv_n);
  std::vector<double> next(n);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    double dangling = 0.0;
    for (std::size_t u = 0; u < n; ++u)
      if (out_weight[u] == 0.0) dangling += res.scores[u];
    const double base = (1.0 - d) * inv_n + d * dangling * inv_n;
    std::fill(next.begin(), next.end(), base);
    for (std::size_t u = 0; u < n; ++u) {
      if (out_weight[u] == 0.0) continue;
      const double share = d * res.scores[u] / out_weight[u];
      for (const auto& [v, w] : graph.adjacency[u]) next[v] += share * w;
    }
    double delta = 0.0;
    for (std::size_t u = 0; u < n; ++u) delta += std::abs(next[u] - res.scores[u]);
    res.scores.swap(next);
    res.iterations = it + 1;
    if (delta < cfg.tolerance) {
      res.converged = true;
      break;
    }
  }
  return res;
}

std::vector<std::string> select_keywords(const std::vector<WordScore>& scores, std::size_t k) {
  if (k > scores.size()) {
    throw Error(ErrorCode::kConstraint, "select_keywords: K = " + std::to_string(k) + " exceeds " +
                                            std::to_string(scores.size()) + " scored words");
  }
  std::vector<WordScore> sorted = scores;
  std::sort(sorted.begin(), sorted.end(), by_score_then_word);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(sorted[i].word);
  return out;
}

KeywordReport extract_keywords(const WordDocs& docs, const KeywordConfig& cfg) {
  cfg.validate();
  KeywordReport report;
  report.candidates = tfidf_candidates(docs, cfg);
  if (report.candidates.empty()) return report;
  std::vector<std::string> words;
  for (const auto& c : report.candidates) words.push_back(c.word);
  const WordGraph g = cooccurrence_graph(docs, words);
  const PageRankResult pr = pagerank(g, cfg);
  report.pagerank = pr.scores;
  report.pagerank_converged = pr.converged;
  std::vector<WordScore> ranked;
  for (std::size_t i = 0; i < words.size(); ++i) ranked.push_back({words[i], pr.scores[i]});
  // A corpus may yield fewer admissible candidates than top_k.
  report.keywords = select_keywords(ranked, std::min(cfg.top_k, ranked.size()));
  return report;
}

std::string RelationType::str() const {
  switch (kind) {
    case RelationKind::kCategory: return "category:" + name;
    case RelationKind::kKeyword: return "keyword:" + name;
    case RelationKind::kMatched: return "matched";
  }
  return "?";
}

RelationType RelationType::parse(const std::string& s) {
  if (s == "matched") return {RelationKind::kMatched, ""};
  if (s.starts_with("category:")) return {RelationKind::kCategory, s.substr(9)};
  if (s.starts_with("keyword:")) return {RelationKind::kKeyword, s.substr(8)};
  throw Error(ErrorCode::kFormat, "unknown relation '" + s + "'");
}

RelationGraph::RelationGraph(std::vector<std::string> node_ids, std::vector<corpus::DocKind> kinds,
                             std::vector<RelationType> relations)
    : node_ids_(std::move(node_ids)), kinds_(std::move(kinds)), relations_(std::move(relations)) {
  if (node_ids_.size() != kinds_.size()) throw Error(ErrorCode::kInternal, "relation graph: kinds misaligned");
  adjacency_.assign(relations_.size(), std::vector<std::vector<std::size_t>>(node_ids_.size()));
}

std::size_t RelationGraph::relation_index(const RelationType& r) const {
  for (std::size_t i = 0; i < relations_.size(); ++i)
    if (relations_[i] == r) return i;
  throw Error(ErrorCode::kFormat, "relation " + r.str() + " not in graph");
}

std::size_t RelationGraph::node_index(const std::string& id) const {
  for (std::size_t i = 0; i < node_ids_.size(); ++i)
    if (node_ids_[i] == id) return i;
  throw Error(ErrorCode::kFormat, "node " + id + " not in graph");
}

void RelationGraph::add_edge(std::size_t a, std::size_t b, std::size_t relation) {
  if (a == b) return;
  if (a >= node_count() || b >= node_count() || relation >= relation_count()) {
    throw Error(ErrorCode::kInternal, "add_edge: index out of range");
  }
  auto insert = [](std::vector<std::size_t>& list, std::size_t v) {
    const auto it = std::lower_bound(list.begin(), list.end(), v);
    if (it == list.end() || *it != v) list.insert(it, v);
  };
  insert(adjacency_[relation][a], b);
  insert(adjacency_[relation][b], a);
}

std::vector<RelationGraph::Edge> RelationGraph::edges() const {
  std::vector<Edge> out;
  for (std::size_t r = 0; r < relation_count(); ++r)
    for (std::size_t u = 0; u < node_count(); ++u)
      for (std::size_t v : adjacency_[r][u])
        if (u < v) out.push_back({u, v, r});
  return out;
}

std::size_t RelationGraph::edge_count(std::size_t relation) const {
  std::size_t total = 0;
  for (const auto& list : adjacency_[relation]) total += list.size();
  return total / 2;
}

RelationGraph build_graph(const corpus::Corpus& corpus, const std::vector<std::string>& keywords,
                          const std::vector<corpus::LabeledPair>& train_positive_pairs,
                          const GraphOptions& options) {
  const auto& docs = corpus.documents;
  std::vector<std::string> ids;
  std::vector<corpus::DocKind> kinds;
  std::set<std::string> labels;
  for (const auto& d : docs) {
    ids.push_back(d.id());
    kinds.push_back(d.kind());
    labels.insert(d.category());
  }
  std::vector<RelationType> relations;
  for (const auto& l : labels) relations.push_back({RelationKind::kCategory, l});
  for (const auto& k : keywords) relations.push_back({RelationKind::kKeyword, k});
  relations.push_back({RelationKind::kMatched, ""});
  RelationGraph g(std::move(ids), std::move(kinds), std::move(relations));

  // Category links: all same-kind pairs per label.
  std::map<std::pair<corpus::DocKind, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < docs.size(); ++i) groups[{docs[i].kind(), docs[i].category()}].push_back(i);
  std::size_t rel = 0;
  for (const auto& l : labels) {
    for (auto kind : {corpus::DocKind::kJob, corpus::DocKind::kResume}) {
      const auto it = groups.find({kind, l});
      if (it == groups.end()) continue;
      const auto& members = it->second;
      for (std::size_t a = 0; a < members.size(); ++a)
        for (std::size_t b = a + 1; b < members.size(); ++b) g.add_edge(members[a], members[b], rel);
    }
    ++rel;
  }

  // Keyword links.
  const WordDocs words = document_words(corpus);
  for (const auto& k : keywords) {
    std::vector<std::size_t> holders;
    for (std::size_t i = 0; i < words.size(); ++i)
      if (std::find(words[i].begin(), words[i].end(), k) != words[i].end()) holders.push_back(i);
    for (std::size_t a = 0; a < holders.size(); ++a)
      for (std::size_t b = a + 1; b < holders.size(); ++b) g.add_edge(holders[a], holders[b], rel);
    ++rel;
  }

  if (options.matched_edges) {
    for (const auto& p : train_positive_pairs) {
      if (p.label != corpus::Label::kMatch) continue;
      g.add_edge(corpus.index_of(p.job_id), corpus.index_of(p.resume_id), rel);
    }
  }
  return g;
}

void write_edges(const std::filesystem::path& path, const RelationGraph& graph, std::uint64_t seed) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  std::vector<std::string> relations;
  for (const auto& r : graph.relations()) relations.push_back(r.str());
  json h{{"format", "mvcon.edges"}, {"version", 1}, {"seed", seed},
         {"nodes", graph.node_ids()}, {"relations", relations}};
  out << h.dump() << '\n';
  for (const auto& e : graph.edges()) {
    json j{{"src", graph.node_ids()[e.src]},
           {"dst", graph.node_ids()[e.dst]},
           {"relation", relations[e.relation]}};
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

RelationGraph read_edges(const std::filesystem::path& path, const corpus::Corpus& corpus) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingInput, "missing input file: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, path.string() + ": empty file");
  json h;
  try {
    h = json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  if (h.value("format", "") != "mvcon.edges") {
    throw Error(ErrorCode::kFormat, path.string() + ": expected header with format mvcon.edges");
  }
  const auto nodes = h.at("nodes").get<std::vector<std::string>>();
  if (nodes.size() != corpus.documents.size()) {
    throw Error(ErrorCode::kFormat, path.string() + ": node list does not match the corpus");
  }
  std::vector<corpus::DocKind> kinds;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i] != corpus.documents[i].id()) {
      throw Error(ErrorCode::kFormat, path.string() + ": node order does not match the corpus");
    }
    kinds.push_back(corpus.documents[i].kind());
  }
  std::vector<RelationType> relations;
  std::unordered_map<std::string, std::size_t> rel_index;
  for (const auto& r : h.at("relations").get<std::vector<std::string>>()) {
    rel_index.emplace(r, relations.size());
    relations.push_back(RelationType::parse(r));
  }
  RelationGraph g(nodes, std::move(kinds), std::move(relations));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto it = rel_index.find(j.at("relation").get<std::string>());
      if (it == rel_index.end()) throw Error(ErrorCode::kFormat, "undeclared relation");
      g.add_edge(corpus.index_of(j.at("src").get<std::string>()), corpus.index_of(j.at("dst").get<std::string>()),
                 it->second);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return g;
}

void write_keyword_report(const std::filesystem::path& path, const KeywordReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  std::set<std::string> selected(report.keywords.begin(), report.keywords.end());
  out << "word,tfidf,pagerank,selected\n";
  for (std::size_t i = 0; i < report.candidates.size(); ++i) {
    const auto& c = report.candidates[i];
    out << c.word << ',' << fmt_double(c.score) << ','
        << fmt_double(i < report.pagerank.size() ? report.pagerank[i] : 0.0) << ','
        << (selected.contains(c.word) ? 1 : 0) << '\n';
  }
}

}  // namespace mvcon::relgraph
