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
#include "mvcon/evalx.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "mvcon/config.hpp"
#include "mvcon/coteach.hpp"
#include "mvcon/error.hpp"
#include "mvcon/pipeline.hpp"

namespace mvcon::evalx {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::kShapeMismatch, "auc: scores and labels differ in length");
  std::size_t pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorCode::kConstraint, "auc: labels must be 0 or 1");
    if (!std::isfinite(scores[i])) throw Error(ErrorCode::kNonFinite, "auc: non-finite score");
    pos += static_cast<std::size_t>(labels[i]);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error(ErrorCode::kConstraint, "auc: needs at least one positive and one negative");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of midranks (1-based) over positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum += midrank;
    }
    i = j;
  }
  const double p = static_cast<double>(pos);
  const double n = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

MetricsReport classification_metrics(std::span<const double> scores, std::span<const int> labels, double threshold) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::kShapeMismatch, "metrics: scores and labels differ in length");
  }
  if (scores.empty()) throw Error(ErrorCode::kConstraint, "metrics: empty input");
  MetricsReport r;
  r.n_eval = scores.size();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++r.tp;
    if (predicted && !actual) ++r.fp;
    if (!predicted && actual) ++r.fn;
    if (!predicted && !actual) ++r.tn;
  }
  const auto d = [](std::size_t x) { return static_cast<double>(x); };
  r.accuracy = d(r.tp + r.tn) / d(r.n_eval);
  r.precision = r.tp + r.fp == 0 ? 0.0 : d(r.tp) / d(r.tp + r.fp);
  r.recall = r.tp + r.fn == 0 ? 0.0 : d(r.tp) / d(r.tp + r.fn);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  if (r.tp + r.fn > 0 && r.fp + r.tn > 0) r.auc = auc(scores, labels);
  return r;
}

const char* to_string(Variant v) {
  switch (v) {
    case Variant::kR: return "R";
    case Variant::kT: return "T";
    case Variant::kTR: return "TR";
    case Variant::kTTC: return "TTC";
    case Variant::kRRC: return "RRC";
    case Variant::kTRC: return "TRC";
  }
  return "TRC";
}

Variant parse_variant(const std::string& s) {
  for (Variant v : {Variant::kR, Variant::kT, Variant::kTR, Variant::kTTC, Variant::kRRC, Variant::kTRC}) {
    if (s == to_string(v)) return v;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown variant '" + s + "' (R|T|TR|TTC|RRC|TRC)");
}

AblationResult run_ablation(Variant variant, const RunConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto data = pipeline::prepare_synthetic(cfg, seed);
  pipeline::TrainedVariant trained(data, cfg, variant, seed);
  trained.fit(data, cfg);
  AblationResult r;
  r.variant = variant;
  r.seed = seed;
  r.value = std::numeric_limits<double>::quiet_NaN();
  r.metrics = pipeline::evaluate(trained, data, cfg.threshold);
  r.mean_weight_false_neg = trained.result().final_weight_false_neg;
  r.mean_weight_true_neg = trained.result().final_weight_true_neg;
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  r.wall_seconds = cfg.record_timing ? elapsed.count() : std::numeric_limits<double>::quiet_NaN();
  return r;
}

std::vector<AblationResult> ablate(const RunConfig& cfg) {
  cfg.validate();
  std::vector<AblationResult> rows;
  for (Variant v : cfg.variants) {
    for (std::uint64_t seed : cfg.seeds) rows.push_back(run_ablation(v, cfg, seed));
  }
  return rows;
}

std::vector<AblationResult> sweep(const std::string& param, std::span<const double> values, const RunConfig& cfg) {
  if (values.empty()) throw Error(ErrorCode::kInvalidConfig, "sweep: no values");
  std::vector<AblationResult> rows;
  for (double value : values) {
    RunConfig c = cfg;
    if (param == "delta") {
      c.delta = value;
    } else if (param == "doc_layers") {
      if (!(value >= 1.0) || value != std::floor(value)) {
        throw Error(ErrorCode::kInvalidConfig, "sweep: doc_layers values must be positive integers");
      }
      c.doc_layers = static_cast<std::size_t>(value);
    } else if (param == "train_fraction") {
      c.train_fraction = value;
    } else {
      throw Error(ErrorCode::kInvalidConfig, "sweep: unknown parameter '" + param + "'");
    }
    c.validate();
    for (std::uint64_t seed : c.seeds) {
      AblationResult r = run_ablation(c.variant, c, seed);
      r.param = param;
      r.value = value;
      rows.push_back(r);
    }
  }
  return rows;
}

std::string report_header() {
  return "variant,seed,param,value,auc,acc,precision,recall,f1,mean_weight_false_neg,mean_weight_true_neg,"
         "wall_seconds";
}

std::string report_row(const AblationResult& r) {
  using coteach::format_real;
  return std::string(to_string(r.variant)) + ',' + std::to_string(r.seed) + ',' + r.param + ',' +
         format_real(r.value) + ',' + format_real(r.metrics.auc) + ',' + format_real(r.metrics.accuracy) + ',' +
         format_real(r.metrics.precision) + ',' + format_real(r.metrics.recall) + ',' + format_real(r.metrics.f1) +
         ',' + format_real(r.mean_weight_false_neg) + ',' + format_real(r.mean_weight_true_neg) + ',' +
         format_real(r.wall_seconds);
}

void write_report(const std::filesystem::path& path, std::span<const AblationResult> rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << report_header() << '\n';
  for (const auto& r : rows) out << report_row(r) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace mvcon::evalx
