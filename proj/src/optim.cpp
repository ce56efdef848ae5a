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
#include "mvcon/optim.hpp"

#include <cmath>

#include "mvcon/error.hpp"

namespace mvcon::tg {
namespace {

void require_grads(const std::vector<Tensor>& params) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw Error(ErrorCode::kInternal,
                  "optimizer: parameter " + std::to_string(i) + " has no gradient buffer");
    }
  }
}

}  // namespace

Adam::Adam(std::vector<Tensor> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  for (const Tensor& p : params_) {
    first_.emplace_back(p.size(), 0.0);
    second_.emplace_back(p.size(), 0.0);
  }
}

void Adam::step() {
  require_grads(params_);
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Tensor& p = params_[k];
    auto value = p.mutable_data();
    auto grad = p.grad();
    auto& m = first_[k];
    auto& v = second_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      value[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
    p.zero_grad();
  }
}

Sgd::Sgd(std::vector<Tensor> params, double learning_rate)
    : params_(std::move(params)), learning_rate_(learning_rate) {}

void Sgd::step() {
  require_grads(params_);
  ++step_;
  for (Tensor& p : params_) {
    auto value = p.mutable_data();
    auto grad = p.grad();
    for (std::size_t i = 0; i < value.size(); ++i) value[i] -= learning_rate_ * grad[i];
    p.zero_grad();
  }
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::vector<Tensor> params,
                                          double learning_rate) {
  if (kind == OptimizerKind::kSgd) return std::make_unique<Sgd>(std::move(params), learning_rate);
  AdamConfig cfg;
  cfg.learning_rate = learning_rate;
  return std::make_unique<Adam>(std::move(params), cfg);
}

}  // namespace mvcon::tg
