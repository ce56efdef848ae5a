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
#include "mvcon/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "mvcon/error.hpp"

namespace mvcon {
namespace {

[[noreturn]] void bad(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorCode::kInvalidConfig, "config key '" + key + "': '" + value + "' is not " + expected);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) bad(key, v, "a non-negative integer");
  errno = 0;
  const unsigned long long x = std::strtoull(v.c_str(), nullptr, 10);
  if (errno == ERANGE) bad(key, v, "a 64-bit integer");
  return x;
}

double to_real(const std::string& key, const std::string& v) {
  if (v.empty()) bad(key, v, "a number");
  char* end = nullptr;
  errno = 0;
  const double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x)) bad(key, v, "a finite number");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad(key, v, "a boolean");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string real_str(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  // Shortest form that round-trips keeps rendered configs readable.
  for (int p = 1; p <= 17; ++p) {
    char tmp[32];
    std::snprintf(tmp, sizeof tmp, "%.*g", p, x);
    if (std::strtod(tmp, nullptr) == x) return tmp;
  }
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += f(items[i]);
  }
  return out;
}

struct Key {
  const char* name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

#define MVCON_UINT(NAME, FIELD)                                                                   \
  Key {                                                                                          \
    NAME, [](const RunConfig& c) { return std::to_string(c.FIELD); },                            \
        [](RunConfig& c, const std::string& k, const std::string& v) {                           \
          c.FIELD = static_cast<decltype(c.FIELD)>(to_u64(k, v));                                \
        }                                                                                        \
  }
#define MVCON_REAL(NAME, FIELD)                                                                   \
  Key {                                                                                          \
    NAME, [](const RunConfig& c) { return real_str(c.FIELD); },                                  \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = to_real(k, v); } \
  }
#define MVCON_BOOL(NAME, FIELD)                                                                   \
  Key {                                                                                          \
    NAME, [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); },            \
        [](RunConfig& c, const std::string& k, const std::string& v) { c.FIELD = to_bool(k, v); } \
  }

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = {
      MVCON_UINT("seed", seed),
      MVCON_UINT("n_jobs", synth.n_jobs),
      MVCON_UINT("n_resumes", synth.n_resumes),
      MVCON_UINT("n_categories", synth.n_categories),
      MVCON_UINT("skill_vocab_size", synth.skill_vocab_size),
      MVCON_UINT("skills_per_doc", synth.skills_per_doc),
      MVCON_UINT("n_accepts", synth.n_accepts),
      MVCON_REAL("reject_ratio", synth.reject_ratio),
      MVCON_REAL("false_negative_rate", synth.false_negative_rate),
      MVCON_REAL("neg_pos_ratio", synth.neg_pos_ratio),
      MVCON_UINT("overlap_threshold", synth.overlap_threshold),
      MVCON_REAL("split_train", split_fractions[0]),
      MVCON_REAL("split_valid", split_fractions[1]),
      MVCON_REAL("split_test", split_fractions[2]),
      MVCON_UINT("candidate_count", keywords.candidate_count),
      MVCON_UINT("top_k", keywords.top_k),
      MVCON_REAL("max_df_fraction", keywords.max_df_fraction),
      MVCON_REAL("damping", keywords.damping),
      MVCON_REAL("pagerank_tolerance", keywords.tolerance),
      MVCON_UINT("pagerank_max_iterations", keywords.max_iterations),
      MVCON_BOOL("matched_edges", matched_edges),
      MVCON_UINT("dim", dim),
      MVCON_UINT("heads", heads),
      MVCON_UINT("sent_layers", sent_layers),
      MVCON_UINT("doc_layers", doc_layers),
      MVCON_UINT("ffn_mult", ffn_mult),
      MVCON_UINT("rgcn_layers", rgcn_layers),
      Key{"rgcn_activation", [](const RunConfig& c) { return std::string(relmatch::to_string(c.rgcn_activation)); },
          [](RunConfig& c, const std::string&, const std::string& v) {
            c.rgcn_activation = relmatch::parse_activation(v);
          }},
      Key{"variant", [](const RunConfig& c) { return std::string(evalx::to_string(c.variant)); },
          [](RunConfig& c, const std::string&, const std::string& v) { c.variant = evalx::parse_variant(v); }},
      Key{"strategy", [](const RunConfig& c) { return std::string(coteach::to_string(c.strategy)); },
          [](RunConfig& c, const std::string&, const std::string& v) { c.strategy = coteach::parse_strategy(v); }},
      MVCON_REAL("delta", delta),
      MVCON_UINT("batch_size", batch_size),
      MVCON_UINT("epochs", epochs),
      MVCON_REAL("learning_rate", learning_rate),
      Key{"optimizer",
          [](const RunConfig& c) { return std::string(c.optimizer == tg::OptimizerKind::kAdam ? "adam" : "sgd"); },
          [](RunConfig& c, const std::string& k, const std::string& v) {
            if (v == "adam") {
              c.optimizer = tg::OptimizerKind::kAdam;
            } else if (v == "sgd") {
              c.optimizer = tg::OptimizerKind::kSgd;
            } else {
              bad(k, v, "adam or sgd");
            }
          }},
      MVCON_UINT("early_stop_patience", early_stop_patience),
      MVCON_REAL("train_fraction", train_fraction),
      MVCON_REAL("threshold", threshold),
      Key{"seeds",
          [](const RunConfig& c) { return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }); },
          [](RunConfig& c, const std::string& k, const std::string& v) {
            c.seeds.clear();
            for (const auto& item : split_list(v)) c.seeds.push_back(to_u64(k, item));
          }},
      Key{"variants",
          [](const RunConfig& c) {
            return join(c.variants, [](evalx::Variant x) { return std::string(evalx::to_string(x)); });
          },
          [](RunConfig& c, const std::string&, const std::string& v) {
            c.variants.clear();
            for (const auto& item : split_list(v)) c.variants.push_back(evalx::parse_variant(item));
          }},
      Key{"sweep_param", [](const RunConfig& c) { return c.sweep_param; },
          [](RunConfig& c, const std::string&, const std::string& v) { c.sweep_param = v; }},
      Key{"sweep_values", [](const RunConfig& c) { return join(c.sweep_values, real_str); },
          [](RunConfig& c, const std::string& k, const std::string& v) {
            c.sweep_values.clear();
            for (const auto& item : split_list(v)) c.sweep_values.push_back(to_real(k, item));
          }},
      MVCON_BOOL("record_timing", record_timing),
  };
  return table;
}

#undef MVCON_UINT
#undef MVCON_REAL
#undef MVCON_BOOL

const Key& find_key(const std::string& key) {
  for (const auto& k : key_table()) {
    if (key == k.name) return k;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown config key '" + key + "'");
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const Key& k = find_key(key);
  k.set(*this, key, trim(value));
}

std::string RunConfig::get(const std::string& key) const { return find_key(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.emplace_back(k.name);
    return out;
  }();
  return names;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kInvalidConfig, msg); };
  synth_for(seed).validate();
  double total = 0.0;
  for (double f : split_fractions) {
    if (!(f > 0.0)) fail("split fractions must be positive");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("split fractions must sum to 1");
  keywords.validate();
  encoder(1).validate();
  rgcn().validate();
  coteach_for(seed).validate();
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) fail("train_fraction must lie in (0, 1]");
  if (!(threshold > 0.0 && threshold < 1.0)) fail("threshold must lie in (0, 1)");
  if (seeds.empty()) fail("seeds must not be empty");
  if (variants.empty()) fail("variants must not be empty");
  if (sweep_param != "delta" && sweep_param != "doc_layers" && sweep_param != "train_fraction") {
    fail("sweep_param must be delta, doc_layers or train_fraction");
  }
  if (sweep_values.empty()) fail("sweep_values must not be empty");
}

std::string RunConfig::render() const {
  std::string out;
  for (const auto& k : key_table()) out += std::string(k.name) + "=" + k.get(*this) + "\n";
  return out;
}

void RunConfig::apply_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig, "config line " + std::to_string(lineno) + ": expected key=value");
    }
    set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

void RunConfig::apply_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, std::string("config JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kInvalidConfig, "config JSON must be an object");
  auto scalar = [](const std::string& key, const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) return real_str(v.get<double>());
    throw Error(ErrorCode::kInvalidConfig, "config key '" + key + "': unsupported JSON value");
  };
  for (const auto& [key, v] : j.items()) {
    if (v.is_array()) {
      std::string joined;
      for (std::size_t i = 0; i < v.size(); ++i) joined += (i ? "," : "") + scalar(key, v[i]);
      set(key, joined);
    } else {
      set(key, scalar(key, v));
    }
  }
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingInput, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg;
  if (path.extension() == ".json") {
    cfg.apply_json(ss.str());
  } else {
    cfg.apply_text(ss.str());
  }
  return cfg;
}

corpus::SynthConfig RunConfig::synth_for(std::uint64_t run_seed) const {
  corpus::SynthConfig s = synth;
  s.seed = run_seed;
  return s;
}

textmatch::EncoderConfig RunConfig::encoder(std::size_t vocab_size) const {
  textmatch::EncoderConfig e;
  e.vocab_size = vocab_size;
  e.dim = dim;
  e.heads = heads;
  e.sent_layers = sent_layers;
  e.doc_layers = doc_layers;
  e.ffn_mult = ffn_mult;
  return e;
}

relmatch::RgcnConfig RunConfig::rgcn() const {
  relmatch::RgcnConfig r;
  r.dim = dim;
  r.layers = rgcn_layers;
  r.activation = rgcn_activation;
  return r;
}

coteach::CoTeachConfig RunConfig::coteach_for(std::uint64_t run_seed) const {
  coteach::CoTeachConfig c;
  c.strategy = strategy;
  c.delta = delta;
  c.batch_size = batch_size;
  c.epochs = epochs;
  c.learning_rate = learning_rate;
  c.optimizer = optimizer;
  c.early_stop_patience = early_stop_patience;
  c.seed = derive_seed(run_seed, 0x7472616e);
  return c;
}

}  // namespace mvcon
