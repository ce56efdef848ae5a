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
#include <memory>
#include <string>
#include <vector>

#include "mvcon/tensor.hpp"

namespace mvcon::tg {

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies one update from the current gradients, then zeroes them.
  virtual void step() = 0;
  virtual std::uint64_t steps() const = 0;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam final : public Optimizer {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config);

  void step() override;
  std::uint64_t steps() const override { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
  AdamConfig config_;
  std::uint64_t step_ = 0;
};

class Sgd final : public Optimizer {
 public:
  Sgd(std::vector<Tensor> params, double learning_rate);

  void step() override;
  std::uint64_t steps() const override { return step_; }

 private:
  std::vector<Tensor> params_;
  double learning_rate_;
  std::uint64_t step_ = 0;
};

enum class OptimizerKind { kAdam, kSgd };

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::vector<Tensor> params,
                                          double learning_rate);

}  // namespace mvcon::tg
