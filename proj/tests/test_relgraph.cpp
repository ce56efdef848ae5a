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

#include "doctest.h"
#include "mvcon/error.hpp"
#include "mvcon/relgraph.hpp"
#include "support.hpp"

using namespace mvcon;
using namespace mvcon::testing;
using relgraph::WordDocs;

namespace {

corpus::Corpus text_corpus(const std::vector<std::pair<std::string, std::string>>& docs) {
  corpus::Corpus c;
  std::vector<std::string> texts;
  for (const auto& [id, t] : docs) texts.push_back(t);
  c.vocab = corpus::Vocabulary::build(texts);
  for (const auto& [id, t] : docs) {
    const auto kind = id[0] == 'j' ? corpus::DocKind::kJob : corpus::DocKind::kResume;
    c.documents.push_back(corpus::Document::from_text(id, kind, id.substr(1, 1), t, c.vocab));
  }
  c.reindex();
  return c;
}

}  // namespace

TEST_CASE("pagerank matches dense power iteration on small graphs") {
  Rng rng(41);
  relgraph::KeywordConfig cfg;
  cfg.tolerance = 1e-14;
  cfg.max_iterations = 10000;
  for (int t = 0; t < 100; ++t) {
    const auto n = random_size(rng, 1, 20);
    const auto g = random_word_graph(rng, n, rng.uniform(0.0, 0.5));  // isolated nodes are dangling
    cfg.damping = rng.uniform(0.5, 0.95);
    const auto got = relgraph::pagerank(g, cfg);
    const auto want = dense_pagerank(g, cfg.damping);
    CHECK(got.converged);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(got.scores[i] - want[i]) < 1e-8);
      total += got.scores[i];
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("tf-idf uses the maximum term frequency and drops common words") {
  const WordDocs docs{{"a", "a", "b"}, {"a", "c"}, {"d"}, {"d", "c", "c", "c"}, {"e"}};
  relgraph::KeywordConfig cfg;
  cfg.max_df_fraction = 0.5;
  const auto got = relgraph::tfidf_candidates(docs, cfg);
  // a: df 2, max tf 2; b, e: df 1; c: df 2, max tf 3; d: df 2, max tf 1.
  REQUIRE(got.size() == 5);
  CHECK(got[0].word == "c");
  CHECK(got[0].score == doctest::Approx(3.0 * std::log(2.5)));
  CHECK(got[1].word == "a");
  CHECK(got[1].score == doctest::Approx(2.0 * std::log(2.5)));
  CHECK(got[2].word == "b");
  CHECK(got[2].score == doctest::Approx(std::log(5.0)));
  CHECK(got[3].word == "e");
  CHECK(got[4].word == "d");
  cfg.max_df_fraction = 0.25;
  const auto strict = relgraph::tfidf_candidates(docs, cfg);
  REQUIRE(strict.size() == 2);
  CHECK(strict[0].word == "b");
  cfg.max_df_fraction = 1.0;
  cfg.candidate_count = 3;
  CHECK(relgraph::tfidf_candidates(docs, cfg).size() == 3);
}

TEST_CASE("co-occurrence weights count shared documents") {
  const WordDocs docs{{"a", "b", "a"}, {"a", "b", "c"}, {"c"}};
  const std::vector<std::string> cand{"a", "b", "c"};
  const auto g = relgraph::cooccurrence_graph(docs, cand);
  CHECK(g.weight(0, 1) == 2.0);
  CHECK(g.weight(1, 0) == 2.0);
  CHECK(g.weight(0, 2) == 1.0);
  CHECK(g.weight(1, 2) == 1.0);
  CHECK(g.edge_count() == 3);
}

TEST_CASE("keyword selection breaks score ties by word") {
  const std::vector<relgraph::WordScore> s{{"zeta", 0.5}, {"alpha", 0.5}, {"mid", 0.9}, {"low", 0.1}};
  const auto k = relgraph::select_keywords(s, 3);
  REQUIRE(k.size() == 3);
  CHECK(k[0] == "mid");
  CHECK(k[1] == "alpha");
  CHECK(k[2] == "zeta");
  CHECK_THROWS_AS((void)relgraph::select_keywords(s, 5), Error);
}

TEST_CASE("graph links follow category, keyword and training-match rules") {
  const auto c = text_corpus({{"jA1", "python sql"}, {"jA2", "java"}, {"jB3", "python"},
                              {"rA1", "python java"}, {"rA2", "cooking"}, {"rB3", "sql"}});
  std::vector<corpus::LabeledPair> matched{{"jA1", "rB3", corpus::Label::kMatch, corpus::Provenance::kExplicitAccept, {}}};
  const auto g = relgraph::build_graph(c, {"python"}, matched);
  const auto cat_a = g.relation_index({relgraph::RelationKind::kCategory, "A"});
  const auto kw = g.relation_index({relgraph::RelationKind::kKeyword, "python"});
  const auto m = g.relation_index({relgraph::RelationKind::kMatched, ""});
  const auto idx = [&](const char* id) { return g.node_index(id); };
  auto linked = [&](const char* a, const char* b, std::size_t r) {
    const auto nb = g.neighbors(idx(a), r);
    return std::find(nb.begin(), nb.end(), idx(b)) != nb.end();
  };
  CHECK(linked("jA1", "jA2", cat_a));
  CHECK(linked("rA1", "rA2", cat_a));
  CHECK_FALSE(linked("jA1", "rA1", cat_a));  // category links stay within a kind
  CHECK(linked("jA1", "rA1", kw));
  CHECK(linked("jA1", "jB3", kw));
  CHECK_FALSE(linked("jA2", "rA1", kw));
  CHECK(linked("jA1", "rB3", m));
  CHECK(g.edge_count(m) == 1);
  for (std::size_t r = 0; r < g.relation_count(); ++r)
    for (std::size_t v = 0; v < g.node_count(); ++v)
      for (std::size_t u : g.neighbors(v, r)) {
        CHECK(u != v);
        const auto back = g.neighbors(u, r);
        CHECK(std::find(back.begin(), back.end(), v) != back.end());
      }

  relgraph::GraphOptions no_match;
  no_match.matched_edges = false;
  const auto g2 = relgraph::build_graph(c, {"python"}, matched, no_match);
  CHECK(g2.edge_count(g2.relation_index({relgraph::RelationKind::kMatched, ""})) == 0);
}

TEST_CASE("edges file round-trips") {
  const auto c = text_corpus({{"jA1", "python sql"}, {"jA2", "java"}, {"rA1", "python java"}});
  const auto g = relgraph::build_graph(c, {"python", "java"}, {});
  const auto path = std::filesystem::temp_directory_path() / "mvcon_edges_test.jsonl";
  relgraph::write_edges(path, g, 3);
  const auto back = relgraph::read_edges(path, c);
  CHECK(back.relations() == g.relations());
  CHECK(back.node_ids() == g.node_ids());
  const auto e1 = g.edges(), e2 = back.edges();
  REQUIRE(e1.size() == e2.size());
  for (std::size_t i = 0; i < e1.size(); ++i) {
    CHECK(e1[i].src == e2[i].src);
    CHECK(e1[i].dst == e2[i].dst);
    CHECK(e1[i].relation == e2[i].relation);
  }
  std::filesystem::remove(path);
}

TEST_CASE("relation types parse their own rendering") {
  for (const relgraph::RelationType& r :
       {relgraph::RelationType{relgraph::RelationKind::kCategory, "x"},
        relgraph::RelationType{relgraph::RelationKind::kKeyword, "python"},
        relgraph::RelationType{relgraph::RelationKind::kMatched, ""}}) {
    CHECK(relgraph::RelationType::parse(r.str()) == r);
  }
  CHECK_THROWS_AS((void)relgraph::RelationType::parse("friend"), Error);
}

TEST_CASE("keyword extraction clamps top_k to the available candidates") {
  const WordDocs docs{{"a", "b"}, {"c"}, {"d", "e"}, {"f"}};
  relgraph::KeywordConfig cfg;
  cfg.max_df_fraction = 1.0;
  cfg.top_k = 50;
  const auto r = relgraph::extract_keywords(docs, cfg);
  CHECK(r.keywords.size() == r.candidates.size());
  CHECK(r.pagerank_converged);
}
