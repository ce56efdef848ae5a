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
#include "mvcon/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "mvcon/error.hpp"

namespace mvcon::corpus {
namespace {

using nlohmann::json;

constexpr const char* kSkillWords[] = {
    "java",     "python",   "golang",    "rust",      "kotlin",     "swift",      "sql",
    "spark",    "hadoop",   "kafka",     "docker",    "kubernetes", "terraform",  "linux",
    "react",    "vue",      "angular",   "css",       "typescript", "webpack",    "figma",
    "sketch",   "photoshop","illustrator","typography","branding",  "negotiation","crm",
    "salesforce","forecasting","prospecting","accounting","auditing","excel",     "tableau",
    "pytorch",  "tensorflow","statistics","regression","nlp",       "vision",     "graphql",
    "redis",    "mongodb",  "postgres",  "jenkins",   "ansible",    "scala"};

constexpr const char* kCategoryNames[] = {"backend",   "frontend", "data",     "design",
                                          "sales",     "finance",  "devops",   "mobile",
                                          "security",  "research", "support",  "marketing"};

constexpr const char* kJobSkillTemplates[] = {
    "we need strong {} skills", "experience with {} is required",
    "the role involves daily {} work", "candidates should know {}"};
constexpr const char* kResumeSkillTemplates[] = {
    "i have worked with {}", "skilled in {}", "built several projects using {}",
    "certified {} practitioner"};
constexpr const char* kJobFillers[] = {
    "competitive salary and benefits", "flexible working hours", "join a fast growing team",
    "office located downtown", "good communication is expected"};
constexpr const char* kResumeFillers[] = {
    "team player with good communication", "bachelor degree holder",
    "available to start immediately", "fluent in english", "open to relocation"};

std::string fill(std::string_view pattern, std::string_view value) {
  std::string out(pattern);
  const auto pos = out.find("{}");
  out.replace(pos, 2, value);
  return out;
}

std::string skill_word(std::size_t i) {
  constexpr std::size_t n = std::size(kSkillWords);
  if (i < n) return kSkillWords[i];
  return "skill" + std::to_string(i);
}

std::string category_name(std::size_t i) {
  constexpr std::size_t n = std::size(kCategoryNames);
  if (i < n) return kCategoryNames[i];
  return "category" + std::to_string(i);
}

std::string doc_id(DocKind kind, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%05zu", kind == DocKind::kJob ? 'j' : 'r', i);
  return buf;
}

template <typename T>
void draw_without_replacement(std::vector<T>& pool, std::size_t count, Rng& rng, std::vector<T>& out) {
  // Partial Fisher-Yates; consumes the drawn prefix of `pool`.
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  pool.erase(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(count));
}

[[noreturn]] void infeasible(const std::string& what) {
  throw Error(ErrorCode::kConstraint, "synthetic corpus infeasible: " + what);
}

json header(const char* format, std::uint64_t seed) {
  return json{{"format", format}, {"version", 1}, {"seed", seed}};
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingInput, "missing input file: " + path.string());
  return in;
}

json parse_line(const std::string& line, const std::filesystem::path& path, std::size_t lineno) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
  }
}

void expect_header(const json& h, const char* format, const std::filesystem::path& path) {
  if (!h.is_object() || h.value("format", "") != format) {
    throw Error(ErrorCode::kFormat, path.string() + ": expected header with format " + format);
  }
}

}  // namespace

const char* to_string(DocKind kind) { return kind == DocKind::kJob ? "job" : "resume"; }
const char* to_string(Label label) { return label == Label::kMatch ? "match" : "no_match"; }
const char* to_string(Provenance p) {
  switch (p) {
    case Provenance::kExplicitAccept: return "explicit_accept";
    case Provenance::kExplicitReject: return "explicit_reject";
    case Provenance::kSampledClicking: return "sampled_clicking";
    case Provenance::kSampledBrowsing: return "sampled_browsing";
  }
  return "?";
}

DocKind parse_doc_kind(std::string_view s) {
  if (s == "job") return DocKind::kJob;
  if (s == "resume") return DocKind::kResume;
  throw Error(ErrorCode::kFormat, "unknown document kind '" + std::string(s) + "'");
}

Label parse_label(std::string_view s) {
  if (s == "match") return Label::kMatch;
  if (s == "no_match") return Label::kNoMatch;
  throw Error(ErrorCode::kFormat, "unknown label '" + std::string(s) + "'");
}

Provenance parse_provenance(std::string_view s) {
  for (auto p : {Provenance::kExplicitAccept, Provenance::kExplicitReject, Provenance::kSampledClicking,
                 Provenance::kSampledBrowsing}) {
    if (s == to_string(p)) return p;
  }
  throw Error(ErrorCode::kFormat, "unknown provenance '" + std::string(s) + "'");
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || std::ispunct(c)) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!split_words(cur).empty()) out.push_back(cur);
    cur.clear();
  };
  for (char ch : text) {
    if (ch == '.' || ch == '!' || ch == '?' || ch == ';' || ch == '\n') {
      flush();
    } else {
      cur.push_back(ch);
    }
  }
  flush();
  return out;
}

Vocabulary::Vocabulary() : words_{"<oov>"} { index_.emplace(words_[0], kOovToken); }

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
  std::set<std::string> distinct;
  for (const auto& t : texts)
    for (auto& w : split_words(t)) distinct.insert(std::move(w));
  return from_words({distinct.begin(), distinct.end()});
}

Vocabulary Vocabulary::from_words(std::vector<std::string> words_without_oov) {
  Vocabulary v;
  for (auto& w : words_without_oov) {
    if (v.index_.contains(w)) throw Error(ErrorCode::kFormat, "duplicate vocabulary word '" + w + "'");
    v.index_.emplace(w, static_cast<TokenId>(v.words_.size()));
    v.words_.push_back(std::move(w));
  }
  return v;
}

TokenId Vocabulary::id(std::string_view word) const {
  const auto it = index_.find(std::string(word));
  return it == index_.end() ? kOovToken : it->second;
}

std::vector<TokenId> tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  for (const auto& w : split_words(text)) ids.push_back(vocab.id(w));
  return ids;
}

Document::Document(std::string id, DocKind kind, std::string category,
                   std::vector<std::vector<TokenId>> sentences, std::string raw_text)
    : id_(std::move(id)),
      kind_(kind),
      category_(std::move(category)),
      sentences_(std::move(sentences)),
      raw_text_(std::move(raw_text)) {
  std::erase_if(sentences_, [](const auto& s) { return s.empty(); });
  if (sentences_.empty()) throw Error(ErrorCode::kFormat, "document " + id_ + " has no sentences");
  if (sentences_.size() > kMaxSentences) {
    sentences_.resize(kMaxSentences);
    truncated_ = true;
  }
  for (auto& s : sentences_) {
    if (s.size() > kMaxSentenceLen) {
      s.resize(kMaxSentenceLen);
      truncated_ = true;
    }
  }
}

Document Document::from_text(std::string id, DocKind kind, std::string category, std::string raw_text,
                             const Vocabulary& vocab) {
  std::vector<std::vector<TokenId>> sentences;
  for (const auto& s : split_sentences(raw_text)) sentences.push_back(tokenize(s, vocab));
  return Document(std::move(id), kind, std::move(category), std::move(sentences), std::move(raw_text));
}

void Document::validate(std::size_t vocab_size) const {
  for (const auto& s : sentences_)
    for (TokenId t : s)
      if (t >= vocab_size) {
        throw Error(ErrorCode::kFormat, "document " + id_ + ": token id " + std::to_string(t) +
                                            " outside vocabulary of size " + std::to_string(vocab_size));
      }
}

bool LabeledPair::consistent() const {
  if (provenance == Provenance::kExplicitAccept) return label == Label::kMatch;
  return label == Label::kNoMatch;
}

void validate_pair(const LabeledPair& pair) {
  if (!pair.consistent()) {
    throw Error(ErrorCode::kFormat, "pair (" + pair.job_id + ", " + pair.resume_id + "): label " +
                                        to_string(pair.label) + " contradicts provenance " +
                                        to_string(pair.provenance));
  }
}

void SynthConfig::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidConfig, std::string("synth config: ") + what);
  };
  need(n_jobs >= 1 && n_resumes >= 1 && n_categories >= 1, "document and category counts must be >= 1");
  need(skill_vocab_size >= 1 && skills_per_doc >= 1 && n_accepts >= 1, "skill and accept counts must be >= 1");
  need(overlap_threshold >= 1, "overlap_threshold must be >= 1");
  need(false_negative_rate >= 0.0 && false_negative_rate <= 1.0, "false_negative_rate must lie in [0,1]");
  need(neg_pos_ratio >= 0.0 && std::isfinite(neg_pos_ratio), "neg_pos_ratio must be finite and >= 0");
  need(reject_ratio >= 0.0 && std::isfinite(reject_ratio), "reject_ratio must be finite and >= 0");
}

std::size_t Corpus::index_of(const std::string& doc_id) const {
  const auto it = doc_index_.find(doc_id);
  if (it == doc_index_.end()) throw Error(ErrorCode::kFormat, "unknown document id '" + doc_id + "'");
  return it->second;
}

bool Corpus::contains(const std::string& doc_id) const { return doc_index_.contains(doc_id); }

void Corpus::reindex() {
  doc_index_.clear();
  for (std::size_t i = 0; i < documents.size(); ++i) {
    if (!doc_index_.emplace(documents[i].id(), i).second) {
      throw Error(ErrorCode::kFormat, "duplicate document id '" + documents[i].id() + "'");
    }
  }
}

bool synthetic_match(const SyntheticCorpus& synth, std::size_t job, std::size_t resume,
                     std::size_t overlap_threshold) {
  const auto& docs = synth.corpus.documents;
  if (docs[job].category() != docs[resume].category()) return false;
  std::size_t shared = 0;
  for (const auto& s : synth.skills[job])
    shared += static_cast<std::size_t>(std::count(synth.skills[resume].begin(), synth.skills[resume].end(), s));
  return shared >= overlap_threshold;
}

SyntheticCorpus generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  // Skill s belongs to category s mod C.
  std::vector<std::vector<std::string>> pools(cfg.n_categories);
  for (std::size_t s = 0; s < cfg.skill_vocab_size; ++s) pools[s % cfg.n_categories].push_back(skill_word(s));

  SyntheticCorpus out;
  std::vector<std::string> texts;
  std::vector<std::string> categories;
  std::vector<DocKind> kinds;

  auto make_doc = [&](DocKind kind) {
    const std::size_t c = static_cast<std::size_t>(rng.below(cfg.n_categories));
    auto pool = pools[c];
    const std::size_t want = 1 + static_cast<std::size_t>(rng.below(cfg.skills_per_doc));
    std::vector<std::string> skills;
    draw_without_replacement(pool, std::min(want, pool.size()), rng, skills);

    const bool job = kind == DocKind::kJob;
    std::vector<std::string> body;
    for (const auto& s : skills) {
      const auto& tpl = job ? kJobSkillTemplates : kResumeSkillTemplates;
      body.push_back(fill(tpl[rng.below(std::size(kJobSkillTemplates))], s));
    }
    const std::size_t n_fill = 1 + static_cast<std::size_t>(rng.below(2));
    for (std::size_t i = 0; i < n_fill; ++i) {
      const auto& f = job ? kJobFillers : kResumeFillers;
      body.emplace_back(f[rng.below(std::size(kJobFillers))]);
    }
    rng.shuffle(std::span(body));
    std::string text = job ? fill("hiring for a {} position", category_name(c))
                           : fill("seeking a {} role", category_name(c));
    for (const auto& sentence : body) text += ". " + sentence;
    text += ".";

    texts.push_back(std::move(text));
    categories.push_back(category_name(c));
    kinds.push_back(kind);
    out.skills.push_back(std::move(skills));
  };
  for (std::size_t i = 0; i < cfg.n_jobs; ++i) make_doc(DocKind::kJob);
  for (std::size_t i = 0; i < cfg.n_resumes; ++i) make_doc(DocKind::kResume);

  Corpus& corpus = out.corpus;
  corpus.seed = cfg.seed;
  corpus.vocab = Vocabulary::build(texts);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const std::size_t local = kinds[i] == DocKind::kJob ? i : i - cfg.n_jobs;
    corpus.documents.push_back(
        Document::from_text(doc_id(kinds[i], local), kinds[i], categories[i], texts[i], corpus.vocab));
  }
  corpus.reindex();

  // Classify every (job, resume) pair against the planted match function.
  using Cell = std::pair<std::size_t, std::size_t>;
  std::vector<Cell> matches, same_cat_non_matches, non_matches;
  for (std::size_t j = 0; j < cfg.n_jobs; ++j) {
    for (std::size_t r = cfg.n_jobs; r < cfg.n_jobs + cfg.n_resumes; ++r) {
      if (synthetic_match(out, j, r, cfg.overlap_threshold)) {
        matches.emplace_back(j, r);
      } else {
        non_matches.emplace_back(j, r);
        if (categories[j] == categories[r]) same_cat_non_matches.emplace_back(j, r);
      }
    }
  }
  out.true_match_count = matches.size();

  const std::size_t n_rejects = static_cast<std::size_t>(std::llround(cfg.reject_ratio * cfg.n_accepts));
  const std::size_t n_negatives = static_cast<std::size_t>(std::llround(cfg.neg_pos_ratio * cfg.n_accepts));
  if (n_rejects > n_negatives) {
    infeasible("explicit rejects (" + std::to_string(n_rejects) + ") exceed the negative budget neg_pos_ratio x accepts (" +
               std::to_string(n_negatives) + ")");
  }
  const std::size_t n_sampled = n_negatives - n_rejects;
  const std::size_t n_planted = static_cast<std::size_t>(std::llround(cfg.false_negative_rate * n_sampled));
  if (cfg.n_accepts + n_planted > matches.size()) {
    infeasible("accepts (" + std::to_string(cfg.n_accepts) + ") plus planted false negatives (" +
               std::to_string(n_planted) + ") exceed the " + std::to_string(matches.size()) +
               " true matches");
  }
  if (n_rejects > same_cat_non_matches.size()) {
    infeasible("explicit rejects (" + std::to_string(n_rejects) + ") exceed the " +
               std::to_string(same_cat_non_matches.size()) + " same-category non-matches");
  }

  std::vector<Cell> accepts, rejects, planted, true_negs;
  draw_without_replacement(matches, cfg.n_accepts, rng, accepts);
  draw_without_replacement(same_cat_non_matches, n_rejects, rng, rejects);
  draw_without_replacement(matches, n_planted, rng, planted);
  std::set<Cell> taken(rejects.begin(), rejects.end());
  std::erase_if(non_matches, [&](const Cell& c) { return taken.contains(c); });
  if (n_sampled - n_planted > non_matches.size()) infeasible("not enough non-matching pairs for sampled negatives");
  draw_without_replacement(non_matches, n_sampled - n_planted, rng, true_negs);

  auto make_pair = [&](const Cell& c, Label label, Provenance p, Label truth) {
    return LabeledPair{corpus.documents[c.first].id(), corpus.documents[c.second].id(), label, p, truth};
  };
  for (const auto& c : accepts)
    corpus.pairs.push_back(make_pair(c, Label::kMatch, Provenance::kExplicitAccept, Label::kMatch));
  for (const auto& c : rejects)
    corpus.pairs.push_back(make_pair(c, Label::kNoMatch, Provenance::kExplicitReject, Label::kNoMatch));

  // The unlabeled interaction pool: planted and true negatives, shuffled, then
  // cut into equal clicking/browsing pools and drawn in full.
  std::vector<LabeledPair> pool;
  for (const auto& c : planted)
    pool.push_back(make_pair(c, Label::kNoMatch, Provenance::kSampledClicking, Label::kMatch));
  for (const auto& c : true_negs)
    pool.push_back(make_pair(c, Label::kNoMatch, Provenance::kSampledClicking, Label::kNoMatch));
  rng.shuffle(std::span(pool));
  const std::size_t n_click = (pool.size() + 1) / 2;
  std::vector<LabeledPair> clicking(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_click));
  std::vector<LabeledPair> browsing(pool.begin() + static_cast<std::ptrdiff_t>(n_click), pool.end());
  std::vector<LabeledPair> positives(corpus.pairs.begin(), corpus.pairs.begin() + static_cast<std::ptrdiff_t>(cfg.n_accepts));
  if (n_sampled > 0) {
    const double ratio = static_cast<double>(n_sampled) / static_cast<double>(cfg.n_accepts);
    auto sampled = sample_negatives(positives, clicking, browsing, ratio, rng);
    corpus.pairs.insert(corpus.pairs.end(), sampled.begin(), sampled.end());
  }
  return out;
}

std::vector<LabeledPair> sample_negatives(const std::vector<LabeledPair>& positives,
                                          const std::vector<LabeledPair>& clicking_pool,
                                          const std::vector<LabeledPair>& browsing_pool, double ratio,
                                          Rng& rng) {
  if (!(ratio >= 0.0) || !std::isfinite(ratio)) {
    throw Error(ErrorCode::kInvalidConfig, "sample_negatives: ratio must be finite and >= 0");
  }
  const auto total = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(positives.size())));
  const std::size_t from_click = (total + 1) / 2;
  const std::size_t from_browse = total / 2;
  if (from_click > clicking_pool.size() || from_browse > browsing_pool.size()) {
    throw Error(ErrorCode::kConstraint,
                "sample_negatives: pool exhausted (need " + std::to_string(from_click) + " clicking / " +
                    std::to_string(from_browse) + " browsing, have " + std::to_string(clicking_pool.size()) +
                    " / " + std::to_string(browsing_pool.size()) + ")");
  }
  std::vector<LabeledPair> out;
  auto draw = [&](std::vector<LabeledPair> pool, std::size_t n, Provenance p) {
    std::vector<LabeledPair> picked;
    draw_without_replacement(pool, n, rng, picked);
    for (auto& pair : picked) {
      pair.label = Label::kNoMatch;
      pair.provenance = p;
      out.push_back(std::move(pair));
    }
  };
  draw(clicking_pool, from_click, Provenance::kSampledClicking);
  draw(browsing_pool, from_browse, Provenance::kSampledBrowsing);
  return out;
}

DatasetSplit split(const std::vector<LabeledPair>& pairs, std::array<double, 3> fractions, std::uint64_t seed) {
  const double sum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(sum - 1.0) > 1e-9 || fractions[0] < 0 || fractions[1] < 0 || fractions[2] < 0) {
    throw Error(ErrorCode::kInvalidConfig, "split: fractions must be non-negative and sum to 1");
  }
  std::vector<std::size_t> explicit_idx, sampled_idx;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    validate_pair(pairs[i]);
    (is_explicit(pairs[i].provenance) ? explicit_idx : sampled_idx).push_back(i);
  }
  if (explicit_idx.size() < 10) {
    throw Error(ErrorCode::kConstraint, "split: " + std::to_string(explicit_idx.size()) +
                                            " explicit pairs; at least 10 are required");
  }
  Rng rng(seed);
  rng.shuffle(std::span(explicit_idx));
  const std::size_t n = explicit_idx.size();
  const auto n_valid = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::llround(fractions[2] * static_cast<double>(n)));
  const std::size_t n_train = n - n_valid - n_test;

  std::vector<std::size_t> train(explicit_idx.begin(), explicit_idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> valid(explicit_idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                                 explicit_idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  std::vector<std::size_t> test(explicit_idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), explicit_idx.end());
  train.insert(train.end(), sampled_idx.begin(), sampled_idx.end());
  return split_from_indices(pairs, std::move(train), std::move(valid), std::move(test));
}

DatasetSplit split_from_indices(const std::vector<LabeledPair>& pairs, std::vector<std::size_t> train,
                                std::vector<std::size_t> valid, std::vector<std::size_t> test) {
  DatasetSplit out;
  std::set<std::pair<std::string, std::string>> seen;
  auto take = [&](const std::vector<std::size_t>& idx, std::vector<LabeledPair>& dst, bool eval) {
    for (std::size_t i : idx) {
      if (i >= pairs.size()) throw Error(ErrorCode::kFormat, "split manifest index out of range");
      const auto& p = pairs[i];
      if (eval && !is_explicit(p.provenance)) {
        throw Error(ErrorCode::kFormat, "split: sampled pair in validation/test");
      }
      if (!seen.emplace(p.job_id, p.resume_id).second) {
        throw Error(ErrorCode::kFormat, "split: pair (" + p.job_id + ", " + p.resume_id + ") appears twice");
      }
      dst.push_back(p);
    }
  };
  take(train, out.train, false);
  take(valid, out.valid, true);
  take(test, out.test, true);
  out.train_index = std::move(train);
  out.valid_index = std::move(valid);
  out.test_index = std::move(test);
  return out;
}

void write_documents(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  json h = header("mvcon.docs", corpus.seed);
  std::vector<std::string> words(corpus.vocab.words().begin() + 1, corpus.vocab.words().end());
  h["vocab"] = words;
  out << h.dump() << '\n';
  for (const auto& d : corpus.documents) {
    json j{{"id", d.id()},
           {"kind", to_string(d.kind())},
           {"category", d.category()},
           {"sentences", d.sentences()},
           {"raw_text", d.raw_text()}};
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

void write_pairs(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << header("mvcon.pairs", corpus.seed).dump() << '\n';
  for (const auto& p : corpus.pairs) {
    json j{{"job_id", p.job_id},
           {"resume_id", p.resume_id},
           {"label", to_string(p.label)},
           {"provenance", to_string(p.provenance)}};
    if (p.hidden_truth) j["hidden_truth"] = to_string(*p.hidden_truth);
    out << j.dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

void write_split_manifest(const std::filesystem::path& path, const DatasetSplit& split, std::uint64_t seed) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  json j = header("mvcon.split", seed);
  j["train"] = split.train_index;
  j["valid"] = split.valid_index;
  j["test"] = split.test_index;
  out << j.dump() << '\n';
}

Corpus read_corpus(const std::filesystem::path& docs_path, const std::filesystem::path& pairs_path) {
  Corpus corpus;
  {
    auto in = open_input(docs_path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, docs_path.string() + ": empty file");
    const json h = parse_line(line, docs_path, ++lineno);
    expect_header(h, "mvcon.docs", docs_path);
    corpus.seed = h.at("seed").get<std::uint64_t>();
    corpus.vocab = Vocabulary::from_words(h.at("vocab").get<std::vector<std::string>>());
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json j = parse_line(line, docs_path, lineno);
      try {
        Document d(j.at("id").get<std::string>(), parse_doc_kind(j.at("kind").get<std::string>()),
                   j.at("category").get<std::string>(),
                   j.at("sentences").get<std::vector<std::vector<TokenId>>>(), j.value("raw_text", ""));
        d.validate(corpus.vocab.size());
        corpus.documents.push_back(std::move(d));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kFormat, docs_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  corpus.reindex();
  {
    auto in = open_input(pairs_path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, pairs_path.string() + ": empty file");
    expect_header(parse_line(line, pairs_path, ++lineno), "mvcon.pairs", pairs_path);
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const json j = parse_line(line, pairs_path, lineno);
      try {
        LabeledPair p{j.at("job_id").get<std::string>(), j.at("resume_id").get<std::string>(),
                      parse_label(j.at("label").get<std::string>()),
                      parse_provenance(j.at("provenance").get<std::string>()), std::nullopt};
        if (j.contains("hidden_truth")) p.hidden_truth = parse_label(j.at("hidden_truth").get<std::string>());
        validate_pair(p);
        if (corpus.documents[corpus.index_of(p.job_id)].kind() != DocKind::kJob ||
            corpus.documents[corpus.index_of(p.resume_id)].kind() != DocKind::kResume) {
          throw Error(ErrorCode::kFormat, "pair (" + p.job_id + ", " + p.resume_id + ") is not job/resume");
        }
        corpus.pairs.push_back(std::move(p));
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kFormat, pairs_path.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  return corpus;
}

DatasetSplit read_split_manifest(const std::filesystem::path& path, const Corpus& corpus) {
  auto in = open_input(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kFormat, path.string() + ": empty file");
  const json j = parse_line(line, path, 1);
  expect_header(j, "mvcon.split", path);
  try {
    return split_from_indices(corpus.pairs, j.at("train").get<std::vector<std::size_t>>(),
                              j.at("valid").get<std::vector<std::size_t>>(),
                              j.at("test").get<std::vector<std::size_t>>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

}  // namespace mvcon::corpus
