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

// Two-learner co-teaching. Each batch is split in half; each learner examines
// the half its peer trains on, re-weighting and/or filtering the sampled
// negatives there, and the peer updates on the examined data.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvcon/corpus.hpp"
#include "mvcon/optim.hpp"
#include "mvcon/relmatch.hpp"
#include "mvcon/rng.hpp"
#include "mvcon/tensor.hpp"
#include "mvcon/textmatch.hpp"

namespace mvcon::coteach {

using tg::Tensor;

struct Instance {
  corpus::PairIndex pair;
  double target = 0.0;
  corpus::Provenance provenance = corpus::Provenance::kExplicitReject;
  std::optional<corpus::Label> hidden_truth;

  bool sampled() const { return corpus::is_sampled(provenance); }
};

/// Resolves document ids against the corpus.
std::vector<Instance> to_instances(const corpus::Corpus& corpus, std::span<const corpus::LabeledPair> pairs);
std::vector<corpus::PairIndex> pair_indices(std::span<const Instance> instances);

enum class Role { kText, kRelation };
const char* to_string(Role role);

class Learner {
 public:
  virtual ~Learner() = default;

  virtual Role role() const = 0;
  /// n x 1 match probabilities; records on the active tape.
  virtual Tensor forward(std::span<const corpus::PairIndex> pairs) const = 0;
  virtual tg::NamedTensors named_parameters() const = 0;

  std::vector<Tensor> parameters() const;
  /// Predictions without recording.
  std::vector<double> score(std::span<const corpus::PairIndex> pairs) const;
  std::vector<double> score(std::span<const Instance> instances) const;

  /// Parameter values plus any non-trainable input buffer, for best-epoch restore.
  struct Snapshot {
    std::vector<std::vector<double>> values;
    Tensor buffer;
  };
  virtual Snapshot snapshot() const;
  virtual void restore(const Snapshot& s);
};

class TextLearner final : public Learner {
 public:
  TextLearner(textmatch::TextMatchModel& model, const corpus::Corpus& corpus) : model_(model), corpus_(corpus) {}

  Role role() const override { return Role::kText; }
  Tensor forward(std::span<const corpus::PairIndex> pairs) const override;
  tg::NamedTensors named_parameters() const override { return model_.named_parameters(); }
  Snapshot snapshot() const override;
  void restore(const Snapshot& s) override;

  textmatch::TextMatchModel& model() const { return model_; }

 private:
  textmatch::TextMatchModel& model_;
  const corpus::Corpus& corpus_;
};

class RelationLearner final : public Learner {
 public:
  RelationLearner(relmatch::RelMatchModel& model, const relmatch::RelationAdjacency& adj)
      : model_(model), adj_(adj) {}

  Role role() const override { return Role::kRelation; }
  Tensor forward(std::span<const corpus::PairIndex> pairs) const override;
  tg::NamedTensors named_parameters() const override { return model_.named_parameters(); }
  Snapshot snapshot() const override;
  void restore(const Snapshot& s) override;

  relmatch::RelMatchModel& model() const { return model_; }

 private:
  relmatch::RelMatchModel& model_;
  const relmatch::RelationAdjacency& adj_;
};

/// Random disjoint halves; the odd element goes to the first half.
std::pair<std::vector<Instance>, std::vector<Instance>> split_batch(std::span<const Instance> batch, Rng& rng);

/// w = 1 - peer score for sampled negatives, 1 for everything else.
std::vector<double> peer_weights(std::span<const Instance> instances, std::span<const double> peer_scores);
std::vector<double> peer_weights(const Learner& peer, std::span<const Instance> instances);

/// Number of sampled instances kept: floor(delta * k_sampled).
std::size_t kept_count(double delta, std::size_t k_sampled);

/// Indices (ascending) of the instances that survive filtering: every
/// explicit instance and the kept_count sampled ones with the smallest peer
/// loss, ties by input order.
std::vector<std::size_t> peer_filter(std::span<const Instance> instances, std::span<const double> peer_scores,
                                     double delta);
std::vector<std::size_t> peer_filter(const Learner& peer, std::span<const Instance> instances, double delta);

/// Mean over instances of w_i * BCE(y_i, prediction_i).
Tensor weighted_loss(const Tensor& prediction, std::span<const Instance> instances, std::span<const double> weights);

enum class Strategy { kReweight, kFilter, kBoth, kNone };
const char* to_string(Strategy s);
Strategy parse_strategy(const std::string& s);

struct CoTeachConfig {
  Strategy strategy = Strategy::kReweight;
  double delta = 0.8;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  tg::OptimizerKind optimizer = tg::OptimizerKind::kAdam;
  std::size_t early_stop_patience = 5;  // 0 disables early stopping
  std::uint64_t seed = 1;

  void validate() const;
};

/// Examined data for one learner.
struct Examined {
  std::vector<Instance> instances;
  std::vector<double> weights;
};

Examined examine(std::span<const Instance> half, std::span<const double> peer_scores, Strategy strategy,
                 double delta);

/// Shuffled index batches for one pass. A trailing batch of one is merged
/// into the previous batch so that every batch can be split.
std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng);

struct EpochRecord {
  std::size_t epoch = 0;
  double loss_a = 0.0;
  double loss_b = 0.0;  // NaN for single-learner training
  double valid_auc_a = 0.0;
  double valid_auc_b = 0.0;
  double valid_auc_fused = 0.0;
  double mean_weight_false_neg = 0.0;  // NaN when undefined
  double mean_weight_true_neg = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
  double final_weight_false_neg = 0.0;  // NaN when undefined
  double final_weight_true_neg = 0.0;
};

/// Called before every pass, epoch index from 0.
using EpochHook = std::function<void(std::size_t epoch)>;

/// Which validation score drives early stopping.
enum class Monitor { kA, kB, kFused };

/// With early_stop_patience > 0 the parameters (and input buffers) of the
/// best validation epoch are restored at the end.
TrainResult train(Learner& a, Learner& b, std::span<const Instance> train_set, std::span<const Instance> valid_set,
                  const CoTeachConfig& cfg, Monitor monitor = Monitor::kA, const EpochHook& hook = {});

/// Plain supervised training of one learner with the same batch stream.
TrainResult train_single(Learner& learner, std::span<const Instance> train_set, std::span<const Instance> valid_set,
                         const CoTeachConfig& cfg, const EpochHook& hook = {});

/// Mean of 1 - peer score over planted false negatives and over true sampled
/// negatives, averaged across the peers given. NaN when a group is empty.
std::pair<double, double> mean_sampled_weights(std::span<const Instance> instances,
                                               std::span<const std::vector<double>> peer_scores);

/// CSV: epoch,loss_a,loss_b,valid_auc_a,valid_auc_b,valid_auc_fused,
///      mean_weight_false_neg,mean_weight_true_neg
void write_history(const std::filesystem::path& path, std::span<const EpochRecord> history);

/// %.17g, or an empty field for NaN.
std::string format_real(double v);

}  // namespace mvcon::coteach
