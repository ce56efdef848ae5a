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
#include "mvcon/coteach.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "mvcon/error.hpp"
#include "mvcon/evalx.hpp"

namespace mvcon::coteach {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<int> labels_of(std::span<const Instance> instances) {
  std::vector<int> out;
  out.reserve(instances.size());
  for (const auto& i : instances) out.push_back(i.target > 0.5 ? 1 : 0);
  return out;
}

// NaN when the set is empty or single-class.
double safe_auc(std::span<const double> scores, std::span<const int> labels) {
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) return kNaN;
  return evalx::auc(scores, labels);
}

double mean_or_nan(double sum, std::size_t n) { return n == 0 ? kNaN : sum / static_cast<double>(n); }

struct WeightTally {
  double false_neg = 0.0, true_neg = 0.0;
  std::size_t n_false = 0, n_true = 0;

  void add(std::span<const Instance> half, std::span<const double> peer_scores) {
    for (std::size_t i = 0; i < half.size(); ++i) {
      if (!half[i].sampled() || !half[i].hidden_truth) continue;
      const double w = 1.0 - peer_scores[i];
      if (*half[i].hidden_truth == corpus::Label::kMatch) {
        false_neg += w;
        ++n_false;
      } else {
        true_neg += w;
        ++n_true;
      }
    }
  }
};

double update(Learner& learner, tg::Optimizer& opt, const Examined& ex, std::size_t epoch) {
  if (ex.instances.empty()) return kNaN;
  try {
    tg::Tape tape;
    for (auto& p : learner.parameters()) p.zero_grad();
    const auto pairs = pair_indices(ex.instances);
    const Tensor loss = weighted_loss(learner.forward(pairs), ex.instances, ex.weights);
    const double value = loss.item();
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::kDivergence, std::string(to_string(learner.role())) + " learner: non-finite loss at epoch " +
                                              std::to_string(epoch));
    }
    tape.backward(loss);
    opt.step();
    return value;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNonFinite) throw;
    throw Error(ErrorCode::kDivergence, std::string(to_string(learner.role())) + " learner diverged at epoch " +
                                            std::to_string(epoch) + ": " + e.what());
  }
}

std::vector<Instance> gather(std::span<const Instance> all, std::span<const std::size_t> index) {
  std::vector<Instance> out;
  out.reserve(index.size());
  for (std::size_t i : index) out.push_back(all[i]);
  return out;
}

}  // namespace

std::vector<Instance> to_instances(const corpus::Corpus& corpus, std::span<const corpus::LabeledPair> pairs) {
  std::vector<Instance> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    Instance i;
    i.pair = {corpus.index_of(p.job_id), corpus.index_of(p.resume_id)};
    i.target = p.label == corpus::Label::kMatch ? 1.0 : 0.0;
    i.provenance = p.provenance;
    i.hidden_truth = p.hidden_truth;
    out.push_back(i);
  }
  return out;
}

std::vector<corpus::PairIndex> pair_indices(std::span<const Instance> instances) {
  std::vector<corpus::PairIndex> out;
  out.reserve(instances.size());
  for (const auto& i : instances) out.push_back(i.pair);
  return out;
}

const char* to_string(Role role) { return role == Role::kText ? "text" : "relation"; }

std::vector<Tensor> Learner::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::vector<double> Learner::score(std::span<const corpus::PairIndex> pairs) const {
  if (pairs.empty()) return {};
  tg::NoGrad no_grad;
  const Tensor p = forward(pairs);
  return {p.data().begin(), p.data().end()};
}

std::vector<double> Learner::score(std::span<const Instance> instances) const {
  const auto pairs = pair_indices(instances);
  return score(pairs);
}

Learner::Snapshot Learner::snapshot() const {
  Snapshot s;
  for (const auto& p : parameters()) s.values.emplace_back(p.data().begin(), p.data().end());
  return s;
}

void Learner::restore(const Snapshot& s) {
  auto params = parameters();
  if (params.size() != s.values.size()) throw Error(ErrorCode::kInternal, "restore: parameter count changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::copy(s.values[i].begin(), s.values[i].end(), params[i].mutable_data().begin());
  }
}

Tensor TextLearner::forward(std::span<const corpus::PairIndex> pairs) const { return model_.forward(corpus_, pairs); }

Learner::Snapshot TextLearner::snapshot() const {
  Snapshot s = Learner::snapshot();
  s.buffer = model_.enhancement();
  return s;
}

void TextLearner::restore(const Snapshot& s) {
  Learner::restore(s);
  if (s.buffer.defined()) model_.set_enhancement(s.buffer);
}

Tensor RelationLearner::forward(std::span<const corpus::PairIndex> pairs) const { return model_.forward(adj_, pairs); }

Learner::Snapshot RelationLearner::snapshot() const {
  Snapshot s = Learner::snapshot();
  if (model_.text_initialized()) s.buffer = model_.initial_states();
  return s;
}

void RelationLearner::restore(const Snapshot& s) {
  Learner::restore(s);
  if (s.buffer.defined()) model_.set_initial_states(s.buffer);
}

std::pair<std::vector<Instance>, std::vector<Instance>> split_batch(std::span<const Instance> batch, Rng& rng) {
  if (batch.size() < 2) {
    throw Error(ErrorCode::kConstraint, "split_batch: batch of " + std::to_string(batch.size()) + " cannot be split");
  }
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  const std::size_t n_a = (batch.size() + 1) / 2;
  std::pair<std::vector<Instance>, std::vector<Instance>> out;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_a ? out.first : out.second).push_back(batch[order[i]]);
  return out;
}

std::vector<double> peer_weights(std::span<const Instance> instances, std::span<const double> peer_scores) {
  if (instances.size() != peer_scores.size()) {
    throw Error(ErrorCode::kShapeMismatch, "peer_weights: score count differs from instance count");
  }
  std::vector<double> w(instances.size(), 1.0);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].sampled() && instances[i].target < 0.5) w[i] = std::clamp(1.0 - peer_scores[i], 0.0, 1.0);
  }
  return w;
}

std::vector<double> peer_weights(const Learner& peer, std::span<const Instance> instances) {
  return peer_weights(instances, peer.score(instances));
}

std::size_t kept_count(double delta, std::size_t k_sampled) {
  // The small slack keeps products such as 0.6 * 5 from flooring to 2.
  const double kept = std::floor(delta * static_cast<double>(k_sampled) + 1e-9);
  return std::min(k_sampled, static_cast<std::size_t>(std::max(0.0, kept)));
}

std::vector<std::size_t> peer_filter(std::span<const Instance> instances, std::span<const double> peer_scores,
                                     double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "peer_filter: delta must lie in (0, 1]");
  }
  if (instances.size() != peer_scores.size()) {
    throw Error(ErrorCode::kShapeMismatch, "peer_filter: score count differs from instance count");
  }
  std::vector<std::size_t> sampled;
  std::vector<char> keep(instances.size(), 0);
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (instances[i].sampled()) {
      sampled.push_back(i);
    } else {
      keep[i] = 1;
    }
  }
  std::vector<double> loss(instances.size());
  for (std::size_t i : sampled) loss[i] = tg::bce_value(peer_scores[i], instances[i].target);
  std::stable_sort(sampled.begin(), sampled.end(), [&](std::size_t x, std::size_t y) { return loss[x] < loss[y]; });
  const std::size_t k = kept_count(delta, sampled.size());
  for (std::size_t i = 0; i < k; ++i) keep[sampled[i]] = 1;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (keep[i]) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> peer_filter(const Learner& peer, std::span<const Instance> instances, double delta) {
  return peer_filter(instances, peer.score(instances), delta);
}

Tensor weighted_loss(const Tensor& prediction, std::span<const Instance> instances, std::span<const double> weights) {
  if (weights.size() != instances.size()) {
    throw Error(ErrorCode::kShapeMismatch, "weighted_loss: weight count differs from instance count");
  }
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorCode::kConstraint, "weighted_loss: weight outside [0, 1]");
  }
  std::vector<double> target;
  target.reserve(instances.size());
  for (const auto& i : instances) target.push_back(i.target);
  return tg::bce_loss(prediction, target, weights);
}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kReweight: return "reweight";
    case Strategy::kFilter: return "filter";
    case Strategy::kBoth: return "both";
    case Strategy::kNone: return "none";
  }
  return "none";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "reweight") return Strategy::kReweight;
  if (s == "filter") return Strategy::kFilter;
  if (s == "both") return Strategy::kBoth;
  if (s == "none") return Strategy::kNone;
  throw Error(ErrorCode::kInvalidConfig, "unknown strategy '" + s + "' (reweight|filter|both|none)");
}

void CoTeachConfig::validate() const {
  if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "delta must lie in (0, 1]");
  if (batch_size < 2) throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 2");
  if (epochs == 0) throw Error(ErrorCode::kInvalidConfig, "epochs must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidConfig, "learning_rate must be positive");
  }
}

Examined examine(std::span<const Instance> half, std::span<const double> peer_scores, Strategy strategy,
                 double delta) {
  Examined ex;
  switch (strategy) {
    case Strategy::kNone:
      ex.instances.assign(half.begin(), half.end());
      ex.weights.assign(half.size(), 1.0);
      break;
    case Strategy::kReweight:
      ex.instances.assign(half.begin(), half.end());
      ex.weights = peer_weights(half, peer_scores);
      break;
    case Strategy::kFilter:
      ex.instances = gather(half, peer_filter(half, peer_scores, delta));
      ex.weights.assign(ex.instances.size(), 1.0);
      break;
    case Strategy::kBoth: {
      const auto kept = peer_filter(half, peer_scores, delta);
      ex.instances = gather(half, kept);
      std::vector<double> kept_scores;
      for (std::size_t i : kept) kept_scores.push_back(peer_scores[i]);
      ex.weights = peer_weights(ex.instances, kept_scores);
      break;
    }
  }
  return ex;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, Rng& rng) {
  if (batch_size == 0) throw Error(ErrorCode::kInvalidConfig, "make_batches: batch_size must be >= 1");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += batch_size) {
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, i + batch_size)));
  }
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

std::pair<double, double> mean_sampled_weights(std::span<const Instance> instances,
                                               std::span<const std::vector<double>> peer_scores) {
  WeightTally tally;
  for (const auto& scores : peer_scores) tally.add(instances, scores);
  return {mean_or_nan(tally.false_neg, tally.n_false), mean_or_nan(tally.true_neg, tally.n_true)};
}

namespace {

struct Validation {
  std::vector<corpus::PairIndex> pairs;
  std::vector<int> labels;
};

double pick(Monitor m, const EpochRecord& r) {
  switch (m) {
    case Monitor::kA: return r.valid_auc_a;
    case Monitor::kB: return r.valid_auc_b;
    case Monitor::kFused: return r.valid_auc_fused;
  }
  return r.valid_auc_a;
}

// Shared epoch loop: `pass` runs one epoch and fills the loss/weight fields,
// `validate` fills the AUC fields.
template <typename Pass, typename Validate, typename Snap, typename Restore>
TrainResult run_epochs(const CoTeachConfig& cfg, Monitor monitor, const EpochHook& hook, Pass&& pass,
                       Validate&& validate, Snap&& snap, Restore&& restore) {
  TrainResult result;
  double best = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  std::size_t since_best = 0;
  decltype(snap()) best_state{};
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (hook) hook(epoch);
    EpochRecord rec;
    rec.epoch = epoch;
    pass(epoch, rec);
    validate(rec);
    result.history.push_back(rec);
    if (cfg.early_stop_patience == 0) continue;
    const double m = pick(monitor, rec);
    if (std::isnan(m)) continue;
    if (m > best) {
      best = m;
      have_best = true;
      result.best_epoch = epoch;
      best_state = snap();
      since_best = 0;
    } else if (++since_best >= cfg.early_stop_patience) {
      result.stopped_early = true;
      break;
    }
  }
  if (have_best) {
    restore(best_state);
  } else {
    result.best_epoch = result.history.empty() ? 0 : result.history.back().epoch;
  }
  return result;
}

}  // namespace

TrainResult train(Learner& a, Learner& b, std::span<const Instance> train_set, std::span<const Instance> valid_set,
                  const CoTeachConfig& cfg, Monitor monitor, const EpochHook& hook) {
  cfg.validate();
  if (train_set.size() < 2) throw Error(ErrorCode::kConstraint, "train: need at least 2 training instances");
  auto opt_a = tg::make_optimizer(cfg.optimizer, a.parameters(), cfg.learning_rate);
  auto opt_b = tg::make_optimizer(cfg.optimizer, b.parameters(), cfg.learning_rate);
  Rng rng(cfg.seed);
  const auto valid_pairs = pair_indices(valid_set);
  const auto valid_labels = labels_of(valid_set);

  auto pass = [&](std::size_t epoch, EpochRecord& rec) {
    double sum_a = 0.0, sum_b = 0.0;
    std::size_t n_a = 0, n_b = 0;
    WeightTally tally;
    for (const auto& idx : make_batches(train_set.size(), cfg.batch_size, rng)) {
      const auto batch = gather(train_set, idx);
      auto [half_a, half_b] = split_batch(batch, rng);
      Examined ex_a, ex_b;
      if (cfg.strategy == Strategy::kNone) {
        std::vector<double> unit_a(half_a.size(), 1.0), unit_b(half_b.size(), 1.0);
        ex_a = examine(half_a, unit_a, Strategy::kNone, cfg.delta);
        ex_b = examine(half_b, unit_b, Strategy::kNone, cfg.delta);
      } else {
        // Both peers score before either update.
        const auto b_on_a = b.score(half_a);
        const auto a_on_b = a.score(half_b);
        tally.add(half_a, b_on_a);
        tally.add(half_b, a_on_b);
        ex_a = examine(half_a, b_on_a, cfg.strategy, cfg.delta);
        ex_b = examine(half_b, a_on_b, cfg.strategy, cfg.delta);
      }
      const double la = update(a, *opt_a, ex_a, epoch);
      const double lb = update(b, *opt_b, ex_b, epoch);
      if (!std::isnan(la)) sum_a += la, ++n_a;
      if (!std::isnan(lb)) sum_b += lb, ++n_b;
    }
    rec.loss_a = mean_or_nan(sum_a, n_a);
    rec.loss_b = mean_or_nan(sum_b, n_b);
    rec.mean_weight_false_neg = mean_or_nan(tally.false_neg, tally.n_false);
    rec.mean_weight_true_neg = mean_or_nan(tally.true_neg, tally.n_true);
  };
  auto validate = [&](EpochRecord& rec) {
    const auto sa = a.score(valid_pairs);
    const auto sb = b.score(valid_pairs);
    std::vector<double> fused(sa.size());
    for (std::size_t i = 0; i < sa.size(); ++i) fused[i] = 0.5 * (sa[i] + sb[i]);
    rec.valid_auc_a = safe_auc(sa, valid_labels);
    rec.valid_auc_b = safe_auc(sb, valid_labels);
    rec.valid_auc_fused = safe_auc(fused, valid_labels);
  };
  auto snap = [&] { return std::make_pair(a.snapshot(), b.snapshot()); };
  auto restore = [&](const std::pair<Learner::Snapshot, Learner::Snapshot>& s) {
    a.restore(s.first);
    b.restore(s.second);
  };
  TrainResult result = run_epochs(cfg, monitor, hook, pass, validate, snap, restore);

  std::vector<Instance> sampled;
  for (const auto& i : train_set) {
    if (i.sampled()) sampled.push_back(i);
  }
  const std::vector<std::vector<double>> peers{a.score(sampled), b.score(sampled)};
  std::tie(result.final_weight_false_neg, result.final_weight_true_neg) = mean_sampled_weights(sampled, peers);
  return result;
}

TrainResult train_single(Learner& learner, std::span<const Instance> train_set, std::span<const Instance> valid_set,
                         const CoTeachConfig& cfg, const EpochHook& hook) {
  cfg.validate();
  if (train_set.size() < 2) throw Error(ErrorCode::kConstraint, "train: need at least 2 training instances");
  auto opt = tg::make_optimizer(cfg.optimizer, learner.parameters(), cfg.learning_rate);
  Rng rng(cfg.seed);
  const auto valid_pairs = pair_indices(valid_set);
  const auto valid_labels = labels_of(valid_set);

  auto pass = [&](std::size_t epoch, EpochRecord& rec) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& idx : make_batches(train_set.size(), cfg.batch_size, rng)) {
      Examined ex;
      ex.instances = gather(train_set, idx);
      ex.weights.assign(ex.instances.size(), 1.0);
      const double l = update(learner, *opt, ex, epoch);
      if (!std::isnan(l)) sum += l, ++n;
    }
    rec.loss_a = mean_or_nan(sum, n);
    rec.loss_b = kNaN;
    rec.mean_weight_false_neg = kNaN;
    rec.mean_weight_true_neg = kNaN;
  };
  auto validate = [&](EpochRecord& rec) {
    rec.valid_auc_a = safe_auc(learner.score(valid_pairs), valid_labels);
    rec.valid_auc_b = kNaN;
    rec.valid_auc_fused = rec.valid_auc_a;
  };
  auto snap = [&] { return learner.snapshot(); };
  auto restore = [&](const Learner::Snapshot& s) { learner.restore(s); };
  TrainResult result = run_epochs(cfg, Monitor::kA, hook, pass, validate, snap, restore);
  result.final_weight_false_neg = kNaN;
  result.final_weight_true_neg = kNaN;
  return result;
}

std::string format_real(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_history(const std::filesystem::path& path, std::span<const EpochRecord> history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << "epoch,loss_a,loss_b,valid_auc_a,valid_auc_b,valid_auc_fused,mean_weight_false_neg,mean_weight_true_neg\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_real(r.loss_a) << ',' << format_real(r.loss_b) << ','
        << format_real(r.valid_auc_a) << ',' << format_real(r.valid_auc_b) << ',' << format_real(r.valid_auc_fused)
        << ',' << format_real(r.mean_weight_false_neg) << ',' << format_real(r.mean_weight_true_neg) << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace mvcon::coteach
