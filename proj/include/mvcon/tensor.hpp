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

// Dense row-major matrices of doubles with tape-based reverse-mode autodiff.
//
// Every tensor is a (rows x cols) matrix; vectors are 1 x n rows and scalars
// are 1 x 1. An op records itself on the thread's active Tape when a tape is
// open and at least one operand requires a gradient. Without an open tape the
// same ops run as plain inference and nothing is retained.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mvcon::tg {

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient reaches this node
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::span<double> grad_buffer();  // allocates zeros on first use
};

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor row(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rows() const { return node_->shape.rows; }
  std::size_t cols() const { return node_->shape.cols; }
  std::size_t size() const { return node_->value.size(); }

  std::span<const double> data() const { return node_->value; }
  // Mutation is reserved for leaves (initialisation, optimiser steps).
  std::span<double> mutable_data() { return node_->value; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * cols() + c]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  void zero_grad();
  void clear_grad() { node_->grad.clear(); }

  /// Copy of the values with no tape linkage and no gradient requirement.
  Tensor detach() const;

  const std::shared_ptr<Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<Node> node_;
};

class Tape {
 public:
  /// Opens a tape and makes it the active tape of the calling thread.
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  void record(std::shared_ptr<Node> node) { nodes_.push_back(std::move(node)); }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

  /// Seeds d(loss)/d(loss) = 1, runs every recorded backward rule once in
  /// reverse execution order, then clears the tape. Leaf gradients accumulate.
  void backward(const Tensor& loss);

 private:
  std::vector<std::shared_ptr<Node>> nodes_;
  Tape* previous_ = nullptr;
};

/// Suspends recording on the calling thread for its lifetime.
class NoGrad {
 public:
  NoGrad();
  ~NoGrad();
  NoGrad(const NoGrad&) = delete;
  NoGrad& operator=(const NoGrad&) = delete;

 private:
  Tape* saved_;
};

/// Constant sparse matrix in compressed-row form (no gradient).
struct SparseRows {
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col;
  std::vector<double> val;

  std::size_t rows() const { return row_ptr.size() - 1; }
};

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_row(const Tensor& a, const Tensor& row);  // row broadcast over the last axis
Tensor add_n(std::span<const Tensor> terms);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor concat(const Tensor& a, const Tensor& b);  // last axis
Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor stack_rows(std::span<const Tensor> parts);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);
Tensor scatter_rows(const Tensor& a, std::span<const std::size_t> index, std::size_t rows);
Tensor spmm(const SparseRows& m, const Tensor& x);
Tensor sigmoid(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor softmax(const Tensor& a);  // over the last axis
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids);
Tensor mean_pool(const Tensor& a, int axis);

/// Row blocks [offsets[s], offsets[s+1]) are independent sequences. Each
/// attends only within itself: per head h, softmax(Q_h K_h^T / sqrt(d_h)) V_h,
/// heads concatenated along the last axis.
Tensor segment_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::span<const std::size_t> offsets,
                         std::size_t heads);

/// Mean of each row block; one output row per block.
Tensor segment_mean(const Tensor& a, std::span<const std::size_t> offsets);

/// Mean over elements of -w * [y ln p + (1 - y) ln(1 - p)], p clamped to
/// [1e-7, 1 - 1e-7]. `prediction` is n x 1 or 1 x n.
Tensor bce_loss(const Tensor& prediction, std::span<const double> target,
                std::span<const double> weight);

inline constexpr double kBceClamp = 1e-7;
double bce_value(double prediction, double target);

}  // namespace mvcon::tg
