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

// Run configuration: every tunable of every stage, loadable from a flat
// key=value file or a JSON object (chosen by extension). Unknown keys are
// rejected.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvcon/corpus.hpp"
#include "mvcon/coteach.hpp"
#include "mvcon/evalx.hpp"
#include "mvcon/relgraph.hpp"
#include "mvcon/relmatch.hpp"
#include "mvcon/textmatch.hpp"

namespace mvcon {

struct RunConfig {
  std::uint64_t seed = 1;

  corpus::SynthConfig synth;
  std::array<double, 3> split_fractions = corpus::kDefaultSplitFractions;

  relgraph::KeywordConfig keywords;
  bool matched_edges = true;

  std::size_t dim = 32;
  std::size_t heads = 2;
  std::size_t sent_layers = 2;
  std::size_t doc_layers = 2;
  std::size_t ffn_mult = 4;
  std::size_t rgcn_layers = 2;
  relmatch::Activation rgcn_activation = relmatch::Activation::kGelu;

  evalx::Variant variant = evalx::Variant::kTRC;
  coteach::Strategy strategy = coteach::Strategy::kReweight;
  double delta = 0.8;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  double learning_rate = 1e-3;
  tg::OptimizerKind optimizer = tg::OptimizerKind::kAdam;
  std::size_t early_stop_patience = 5;

  double train_fraction = 1.0;
  double threshold = 0.5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<evalx::Variant> variants{evalx::Variant::kR,   evalx::Variant::kT,   evalx::Variant::kTR,
                                       evalx::Variant::kTTC, evalx::Variant::kRRC, evalx::Variant::kTRC};
  std::string sweep_param = "delta";
  std::vector<double> sweep_values{0.2, 0.4, 0.6, 0.8, 1.0};
  bool record_timing = false;

  /// Sets one key from its text form. Lists are comma-separated.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  static const std::vector<std::string>& keys();

  void validate() const;

  /// key=value lines in keys() order.
  std::string render() const;

  /// .json -> JSON object; anything else -> key=value lines ('#' comments).
  static RunConfig load(const std::filesystem::path& path);
  void apply_text(const std::string& text);
  void apply_json(const std::string& text);

  corpus::SynthConfig synth_for(std::uint64_t run_seed) const;
  textmatch::EncoderConfig encoder(std::size_t vocab_size) const;
  relmatch::RgcnConfig rgcn() const;
  coteach::CoTeachConfig coteach_for(std::uint64_t run_seed) const;
};

}  // namespace mvcon
