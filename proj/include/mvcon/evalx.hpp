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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace mvcon {
struct RunConfig;
}

namespace mvcon::evalx {

/// Probability that a random positive outscores a random negative, ties
/// counted one half. Computed from midranks. Labels are 0/1.
double auc(std::span<const double> scores, std::span<const int> labels);

struct MetricsReport {
  double auc = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::size_t n_eval = 0;
};

/// Predicts a match when score >= threshold. Precision (and recall) is 0
/// when its denominator is 0. auc is left at 0 when the input is single-class.
MetricsReport classification_metrics(std::span<const double> scores, std::span<const int> labels,
                                     double threshold = 0.5);

enum class Variant { kR, kT, kTR, kTTC, kRRC, kTRC };

const char* to_string(Variant v);
Variant parse_variant(const std::string& s);

struct AblationResult {
  Variant variant = Variant::kTRC;
  std::uint64_t seed = 0;
  std::string param;  // sweep parameter, empty for plain ablation rows
  double value = 0.0;
  MetricsReport metrics;
  double mean_weight_false_neg = 0.0;  // NaN when the variant has no peer weights
  double mean_weight_true_neg = 0.0;
  double wall_seconds = 0.0;  // NaN unless timing is recorded
};

/// Generates the corpus for `seed`, trains the variant and evaluates it on
/// the explicit-only test split.
AblationResult run_ablation(Variant variant, const RunConfig& cfg, std::uint64_t seed);

/// One row per (variant in cfg.variants, seed in cfg.seeds).
std::vector<AblationResult> ablate(const RunConfig& cfg);

/// One row per (value, seed) for cfg.variant with `param` overridden.
/// param is one of delta, doc_layers, train_fraction.
std::vector<AblationResult> sweep(const std::string& param, std::span<const double> values, const RunConfig& cfg);

/// Header: variant,seed,param,value,auc,acc,precision,recall,f1,
///         mean_weight_false_neg,mean_weight_true_neg,wall_seconds
void write_report(const std::filesystem::path& path, std::span<const AblationResult> rows);
std::string report_header();
std::string report_row(const AblationResult& row);

}  // namespace mvcon::evalx
