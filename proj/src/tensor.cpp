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
#include "mvcon/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mvcon/error.hpp"

namespace mvcon::tg {
namespace {

thread_local Tape* g_active_tape = nullptr;

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw Error(ErrorCode::kShapeMismatch,
              std::string(op) + ": incompatible shapes " + a.str() + " and " + b.str());
}

void require_finite(const char* op, const Tensor& t) {
  for (double v : t.data()) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFinite, std::string(op) + ": non-finite input");
    }
  }
}

// Creates the output node and wires it onto the active tape if needed.
class OpBuilder {
 public:
  OpBuilder(const char* op, Shape shape, std::initializer_list<const Tensor*> inputs)
      : node_(std::make_shared<Node>()) {
    node_->shape = shape;
    node_->value.assign(shape.size(), 0.0);
    node_->op = op;
    Tape* tape = Tape::active();
    if (tape == nullptr) return;
    bool any = false;
    for (const Tensor* t : inputs) any = any || t->requires_grad();
    if (!any) return;
    node_->requires_grad = true;
    for (const Tensor* t : inputs) node_->parents.push_back(t->node());
    tape_ = tape;
  }

  std::vector<double>& out() { return node_->value; }
  bool tracking() const { return tape_ != nullptr; }

  template <typename Fn>
  Tensor finish(Fn&& backward) {
    if (tape_ != nullptr) {
      node_->backward = std::forward<Fn>(backward);
      tape_->record(node_);
    }
    return Tensor(node_);
  }

  Tensor finish() { return finish([](Node&) {}); }

 private:
  std::shared_ptr<Node> node_;
  Tape* tape_ = nullptr;
};

bool wants(const Node& n) { return n.requires_grad; }

double gelu_value(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_slope(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

std::string Shape::str() const { return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]"; }

std::span<double> Node::grad_buffer() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(shape, 0.0, requires_grad); }

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  return from(shape, std::vector<double>(shape.size(), value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (values.size() != shape.size()) {
    throw Error(ErrorCode::kShapeMismatch, "tensor: " + std::to_string(values.size()) +
                                               " values for shape " + shape.str());
  }
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({1, 1}, {value}, requires_grad); }

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return from({1, n}, std::move(values), requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw Error(ErrorCode::kShapeMismatch, "item: tensor is " + shape().str());
  return node_->value[0];
}

void Tensor::zero_grad() { node_->grad.assign(node_->value.size(), 0.0); }

Tensor Tensor::detach() const { return from(shape(), node_->value, false); }

Tape::Tape() : previous_(g_active_tape) { g_active_tape = this; }

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

NoGrad::NoGrad() : saved_(g_active_tape) { g_active_tape = nullptr; }

NoGrad::~NoGrad() { g_active_tape = saved_; }

void Tape::backward(const Tensor& loss) {
  if (loss.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "backward: loss must be scalar, got " + loss.shape().str());
  }
  if (!loss.requires_grad()) {
    nodes_.clear();
    return;
  }
  loss.node()->grad_buffer()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node& n = **it;
    if (!n.grad.empty() && n.backward) n.backward(n);
  }
  nodes_.clear();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a.shape(), b.shape());
  require_finite("matmul", a);
  require_finite("matmul", b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  OpBuilder op("matmul", {m, n}, {&a, &b});
  double* c = op.out().data();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* bp = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
  return op.finish([m, k, n](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    const double* g = self.grad.data();
    if (wants(na)) {
      // dA = G B^T, accumulated row-wise against a transposed copy of B.
      double* ga = na.grad_buffer().data();
      const double* pb = nb.value.data();
      std::vector<double> bt(k * n);
      for (std::size_t p = 0; p < k; ++p)
        for (std::size_t j = 0; j < n; ++j) bt[j * k + p] = pb[p * n + j];
      for (std::size_t i = 0; i < m; ++i) {
        double* gai = ga + i * k;
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = g[i * n + j];
          const double* btj = bt.data() + j * k;
          for (std::size_t p = 0; p < k; ++p) gai[p] += gv * btj[p];
        }
      }
    }
    if (wants(nb)) {
      double* gb = nb.grad_buffer().data();
      const double* pa = na.value.data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * g[i * n + j];
        }
      }
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) shape_error("matmul_nt", a.shape(), b.shape());
  require_finite("matmul_nt", a);
  require_finite("matmul_nt", b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  OpBuilder op("matmul_nt", {m, n}, {&a, &b});
  double* c = op.out().data();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += pa[i * k + p] * pb[j * k + p];
      c[i * n + j] = s;
    }
  }
  return op.finish([m, k, n](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    const double* g = self.grad.data();
    if (wants(na)) {
      double* ga = na.grad_buffer().data();
      const double* pb = nb.value.data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = g[i * n + j];
          for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gv * pb[j * k + p];
        }
    }
    if (wants(nb)) {
      double* gb = nb.grad_buffer().data();
      const double* pa = na.value.data();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gv = g[i * n + j];
          for (std::size_t p = 0; p < k; ++p) gb[j * k + p] += gv * pa[i * k + p];
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t m = a.rows(), n = a.cols();
  OpBuilder op("transpose", {n, m}, {&a});
  auto& out = op.out();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.data()[i * n + j];
  return op.finish([m, n](Node& self) {
    Node& na = *self.parents[0];
    auto ga = na.grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) shape_error("add", a.shape(), b.shape());
  require_finite("add", a);
  require_finite("add", b);
  OpBuilder op("add", a.shape(), {&a, &b});
  auto& out = op.out();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return op.finish([](Node& self) {
    for (auto& parent : self.parents) {
      if (!wants(*parent)) continue;
      auto g = parent->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) shape_error("add_row", a.shape(), row.shape());
  require_finite("add_row", a);
  require_finite("add_row", row);
  const std::size_t m = a.rows(), n = a.cols();
  OpBuilder op("add_row", a.shape(), {&a, &row});
  auto& out = op.out();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a.data()[i * n + j] + row.data()[j];
  return op.finish([m, n](Node& self) {
    Node& na = *self.parents[0];
    Node& nr = *self.parents[1];
    if (wants(na)) {
      auto g = na.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (wants(nr)) {
      auto g = nr.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
    }
  });
}

Tensor add_n(std::span<const Tensor> terms) {
  if (terms.empty()) throw Error(ErrorCode::kShapeMismatch, "add_n: no terms");
  const Shape shape = terms[0].shape();
  bool any = false;
  for (const Tensor& t : terms) {
    if (!(t.shape() == shape)) shape_error("add_n", shape, t.shape());
    require_finite("add_n", t);
    any = any || t.requires_grad();
  }
  auto node = std::make_shared<Node>();
  node->shape = shape;
  node->value.assign(shape.size(), 0.0);
  node->op = "add_n";
  for (const Tensor& t : terms)
    for (std::size_t i = 0; i < shape.size(); ++i) node->value[i] += t.data()[i];
  Tape* tape = Tape::active();
  if (tape != nullptr && any) {
    node->requires_grad = true;
    for (const Tensor& t : terms) node->parents.push_back(t.node());
    node->backward = [](Node& self) {
      for (auto& parent : self.parents) {
        if (!wants(*parent)) continue;
        auto g = parent->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    };
    tape->record(node);
  }
  return Tensor(node);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) shape_error("mul", a.shape(), b.shape());
  require_finite("mul", a);
  require_finite("mul", b);
  OpBuilder op("mul", a.shape(), {&a, &b});
  auto& out = op.out();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return op.finish([](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    // Read both values before writing: a and b may be the same node.
    if (wants(na)) {
      auto g = na.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * nb.value[i];
    }
    if (wants(nb)) {
      auto g = nb.grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * na.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  require_finite("scale", a);
  OpBuilder op("scale", a.shape(), {&a});
  auto& out = op.out();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * factor;
  return op.finish([factor](Node& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * factor;
  });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) shape_error("concat", a.shape(), b.shape());
  require_finite("concat", a);
  require_finite("concat", b);
  const std::size_t m = a.rows(), na = a.cols(), nb = b.cols(), n = na + nb;
  OpBuilder op("concat", {m, n}, {&a, &b});
  auto& out = op.out();
  for (std::size_t i = 0; i < m; ++i) {
    std::copy_n(a.data().data() + i * na, na, out.data() + i * n);
    std::copy_n(b.data().data() + i * nb, nb, out.data() + i * n + na);
  }
  return op.finish([m, na, nb, n](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    if (wants(pa)) {
      auto g = pa.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < na; ++j) g[i * na + j] += self.grad[i * n + j];
    }
    if (wants(pb)) {
      auto g = pb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < nb; ++j) g[i * nb + j] += self.grad[i * n + na + j];
    }
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  if (begin > end || end > a.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "slice_cols: range [" + std::to_string(begin) + "," +
                                               std::to_string(end) + ") outside " + a.shape().str());
  }
  const std::size_t m = a.rows(), n = a.cols(), w = end - begin;
  OpBuilder op("slice_cols", {m, w}, {&a});
  auto& out = op.out();
  for (std::size_t i = 0; i < m; ++i) std::copy_n(a.data().data() + i * n + begin, w, out.data() + i * w);
  return op.finish([m, n, w, begin](Node& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * n + begin + j] += self.grad[i * w + j];
  });
}

Tensor stack_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw Error(ErrorCode::kShapeMismatch, "stack_rows: no parts");
  const std::size_t n = parts[0].cols();
  std::size_t m = 0;
  bool any = false;
  for (const Tensor& p : parts) {
    if (p.cols() != n) shape_error("stack_rows", parts[0].shape(), p.shape());
    m += p.rows();
    any = any || p.requires_grad();
  }
  auto node = std::make_shared<Node>();
  node->shape = {m, n};
  node->op = "stack_rows";
  node->value.reserve(m * n);
  for (const Tensor& p : parts) node->value.insert(node->value.end(), p.data().begin(), p.data().end());
  Tape* tape = Tape::active();
  if (tape != nullptr && any) {
    node->requires_grad = true;
    for (const Tensor& p : parts) node->parents.push_back(p.node());
    node->backward = [](Node& self) {
      std::size_t offset = 0;
      for (auto& parent : self.parents) {
        const std::size_t len = parent->value.size();
        if (wants(*parent)) {
          auto g = parent->grad_buffer();
          for (std::size_t i = 0; i < len; ++i) g[i] += self.grad[offset + i];
        }
        offset += len;
      }
    };
    tape->record(node);
  }
  return Tensor(node);
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index) {
  const std::size_t n = a.cols();
  for (std::size_t r : index) {
    if (r >= a.rows()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "gather_rows: row " + std::to_string(r) + " outside " + a.shape().str());
    }
  }
  OpBuilder op("gather_rows", {index.size(), n}, {&a});
  auto& out = op.out();
  for (std::size_t i = 0; i < index.size(); ++i)
    std::copy_n(a.data().data() + index[i] * n, n, out.data() + i * n);
  std::vector<std::size_t> idx(index.begin(), index.end());
  return op.finish([idx = std::move(idx), n](Node& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < n; ++j) g[idx[i] * n + j] += self.grad[i * n + j];
  });
}

Tensor scatter_rows(const Tensor& a, std::span<const std::size_t> index, std::size_t rows) {
  if (index.size() != a.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "scatter_rows: " + std::to_string(index.size()) +
                                               " indices for " + a.shape().str());
  }
  const std::size_t n = a.cols();
  for (std::size_t r : index) {
    if (r >= rows) throw Error(ErrorCode::kShapeMismatch, "scatter_rows: row index out of range");
  }
  OpBuilder op("scatter_rows", {rows, n}, {&a});
  auto& out = op.out();
  for (std::size_t i = 0; i < index.size(); ++i)
    for (std::size_t j = 0; j < n; ++j) out[index[i] * n + j] += a.data()[i * n + j];
  std::vector<std::size_t> idx(index.begin(), index.end());
  return op.finish([idx = std::move(idx), n](Node& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[idx[i] * n + j];
  });
}

Tensor spmm(const SparseRows& m, const Tensor& x) {
  if (m.cols != x.rows()) shape_error("spmm", {m.rows(), m.cols}, x.shape());
  require_finite("spmm", x);
  const std::size_t rows = m.rows(), n = x.cols();
  OpBuilder op("spmm", {rows, n}, {&x});
  auto& out = op.out();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) {
      const double v = m.val[e];
      const double* src = x.data().data() + m.col[e] * n;
      for (std::size_t j = 0; j < n; ++j) out[r * n + j] += v * src[j];
    }
  // The sparse matrix is copied so the backward rule does not dangle.
  return op.finish([m, n](Node& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) {
        const double v = m.val[e];
        for (std::size_t j = 0; j < n; ++j) g[m.col[e] * n + j] += v * self.grad[r * n + j];
      }
  });
}

Tensor sigmoid(const Tensor& a) {
  require_finite("sigmoid", a);
  OpBuilder op("sigmoid", a.shape(), {&a});
  auto& out = op.out();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_value(a.data()[i]);
  return op.finish([](Node& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double y = self.value[i];
      g[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor gelu(const Tensor& a) {
  require_finite("gelu", a);
  OpBuilder op("gelu", a.shape(), {&a});
  auto& out = op.out();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gelu_value(a.data()[i]);
  return op.finish([](Node& self) {
    Node& pa = *self.parents[0];
    auto g = pa.grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * gelu_slope(pa.value[i]);
  });
}

Tensor softmax(const Tensor& a) {
  require_finite("softmax", a);
  const std::size_t m = a.rows(), n = a.cols();
  OpBuilder op("softmax", a.shape(), {&a});
  auto& out = op.out();
  for (std::size_t i = 0; i < m; ++i) {
    const double* x = a.data().data() + i * n;
    double* y = out.data() + i * n;
    const double mx = *std::max_element(x, x + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += (y[j] = std::exp(x[j] - mx));
    for (std::size_t j = 0; j < n; ++j) y[j] /= z;
  }
  return op.finish([m, n](Node& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i) {
      const double* y = self.value.data() + i * n;
      const double* dy = self.grad.data() + i * n;
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += y[j] * (dy[j] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t m = x.rows(), n = x.cols();
  if (gain.rows() != 1 || gain.cols() != n) shape_error("layer_norm", x.shape(), gain.shape());
  if (bias.rows() != 1 || bias.cols() != n) shape_error("layer_norm", x.shape(), bias.shape());
  require_finite("layer_norm", x);
  OpBuilder op("layer_norm", x.shape(), {&x, &gain, &bias});
  auto& out = op.out();
  std::vector<double> xhat(m * n);
  std::vector<double> inv_std(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = x.data().data() + i * n;
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (row[j] - mean) * inv_std[i];
      out[i * n + j] = xhat[i * n + j] * gain.data()[j] + bias.data()[j];
    }
  }
  if (!op.tracking()) return op.finish();
  return op.finish([m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
    Node& px = *self.parents[0];
    Node& pg = *self.parents[1];
    Node& pb = *self.parents[2];
    const double* dy = self.grad.data();
    if (wants(pg)) {
      auto g = pg.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += dy[i * n + j] * xhat[i * n + j];
    }
    if (wants(pb)) {
      auto g = pb.grad_buffer();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += dy[i * n + j];
    }
    if (wants(px)) {
      auto g = px.grad_buffer();
      std::vector<double> dxhat(n);
      for (std::size_t i = 0; i < m; ++i) {
        double mean_d = 0.0, mean_dx = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          dxhat[j] = dy[i * n + j] * pg.value[j];
          mean_d += dxhat[j];
          mean_dx += dxhat[j] * xhat[i * n + j];
        }
        mean_d /= static_cast<double>(n);
        mean_dx /= static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j)
          g[i * n + j] += inv_std[i] * (dxhat[j] - mean_d - xhat[i * n + j] * mean_dx);
      }
    }
  });
}

Tensor embedding_lookup(const Tensor& table, std::span<const std::size_t> ids) {
  for (std::size_t id : ids) {
    if (id >= table.rows()) {
      throw Error(ErrorCode::kShapeMismatch, "embedding_lookup: id " + std::to_string(id) +
                                                 " outside table " + table.shape().str());
    }
  }
  return gather_rows(table, ids);
}

Tensor mean_pool(const Tensor& a, int axis) {
  if (axis != 0 && axis != 1) throw Error(ErrorCode::kShapeMismatch, "mean_pool: axis must be 0 or 1");
  const std::size_t m = a.rows(), n = a.cols();
  if ((axis == 0 && m == 0) || (axis == 1 && n == 0)) {
    throw Error(ErrorCode::kShapeMismatch, "mean_pool: empty axis in " + a.shape().str());
  }
  require_finite("mean_pool", a);
  const Shape shape = axis == 0 ? Shape{1, n} : Shape{m, 1};
  OpBuilder op("mean_pool", shape, {&a});
  auto& out = op.out();
  const double inv = 1.0 / static_cast<double>(axis == 0 ? m : n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[axis == 0 ? j : i] += a.data()[i * n + j] * inv;
  return op.finish([m, n, axis, inv](Node& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[axis == 0 ? j : i] * inv;
  });
}

namespace {

void check_offsets(const char* op, std::span<const std::size_t> offsets, std::size_t rows) {
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != rows) {
    throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": offsets must run from 0 to " + std::to_string(rows));
  }
  for (std::size_t i = 1; i < offsets.size(); ++i) {
    if (offsets[i] <= offsets[i - 1]) throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": empty segment");
  }
}

}  // namespace

Tensor segment_attention(const Tensor& q, const Tensor& k, const Tensor& v, std::span<const std::size_t> offsets,
                         std::size_t heads) {
  if (!(q.shape() == k.shape()) || !(q.shape() == v.shape())) {
    shape_error("segment_attention", q.shape(), k.shape() == q.shape() ? v.shape() : k.shape());
  }
  const std::size_t n = q.rows(), d = q.cols();
  if (heads == 0 || d % heads != 0) {
    throw Error(ErrorCode::kShapeMismatch, "segment_attention: width " + std::to_string(d) +
                                               " not divisible by " + std::to_string(heads) + " heads");
  }
  check_offsets("segment_attention", offsets, n);
  require_finite("segment_attention", q);
  require_finite("segment_attention", k);
  require_finite("segment_attention", v);
  const std::size_t dh = d / heads;
  const double c = 1.0 / std::sqrt(static_cast<double>(dh));
  OpBuilder op("segment_attention", q.shape(), {&q, &k, &v});
  std::vector<std::size_t> seg(offsets.begin(), offsets.end());
  // Attention probabilities, per (segment, head) block of len x len, kept for backward.
  std::vector<double> probs;
  std::vector<std::size_t> prob_at;
  const double* pq = q.data().data();
  const double* pk = k.data().data();
  const double* pv = v.data().data();
  double* out = op.out().data();
  for (std::size_t s = 0; s + 1 < seg.size(); ++s) {
    const std::size_t b = seg[s], len = seg[s + 1] - seg[s];
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t col = h * dh;
      prob_at.push_back(probs.size());
      probs.resize(probs.size() + len * len);
      double* a = probs.data() + prob_at.back();
      for (std::size_t i = 0; i < len; ++i) {
        double* ai = a + i * len;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < len; ++j) {
          double dot = 0.0;
          for (std::size_t t = 0; t < dh; ++t) dot += pq[(b + i) * d + col + t] * pk[(b + j) * d + col + t];
          ai[j] = dot * c;
          mx = std::max(mx, ai[j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < len; ++j) z += (ai[j] = std::exp(ai[j] - mx));
        for (std::size_t j = 0; j < len; ++j) ai[j] /= z;
        double* oi = out + (b + i) * d + col;
        for (std::size_t j = 0; j < len; ++j) {
          const double w = ai[j];
          const double* vj = pv + (b + j) * d + col;
          for (std::size_t t = 0; t < dh; ++t) oi[t] += w * vj[t];
        }
      }
    }
  }
  if (!op.tracking()) return op.finish();
  return op.finish([seg = std::move(seg), probs = std::move(probs), prob_at = std::move(prob_at), heads, dh, d,
                    c](Node& self) {
    Node& nq = *self.parents[0];
    Node& nk = *self.parents[1];
    Node& nv = *self.parents[2];
    const double* g = self.grad.data();
    double* gq = wants(nq) ? nq.grad_buffer().data() : nullptr;
    double* gk = wants(nk) ? nk.grad_buffer().data() : nullptr;
    double* gv = wants(nv) ? nv.grad_buffer().data() : nullptr;
    std::vector<double> ds;
    std::size_t block = 0;
    for (std::size_t s = 0; s + 1 < seg.size(); ++s) {
      const std::size_t b = seg[s], len = seg[s + 1] - seg[s];
      ds.assign(len * len, 0.0);
      for (std::size_t h = 0; h < heads; ++h, ++block) {
        const std::size_t col = h * dh;
        const double* a = probs.data() + prob_at[block];
        for (std::size_t i = 0; i < len; ++i) {
          const double* gi = g + (b + i) * d + col;
          // dA_ij = dO_i . V_j; dS_ij = A_ij (dA_ij - sum_l A_il dA_il)
          double dot = 0.0;
          for (std::size_t j = 0; j < len; ++j) {
            double da = 0.0;
            const double* vj = nv.value.data() + (b + j) * d + col;
            for (std::size_t t = 0; t < dh; ++t) da += gi[t] * vj[t];
            ds[i * len + j] = da;
            dot += a[i * len + j] * da;
          }
          for (std::size_t j = 0; j < len; ++j) ds[i * len + j] = a[i * len + j] * (ds[i * len + j] - dot) * c;
          if (gv != nullptr) {
            for (std::size_t j = 0; j < len; ++j) {
              double* gvj = gv + (b + j) * d + col;
              const double w = a[i * len + j];
              for (std::size_t t = 0; t < dh; ++t) gvj[t] += w * gi[t];
            }
          }
        }
        for (std::size_t i = 0; i < len; ++i) {
          for (std::size_t j = 0; j < len; ++j) {
            const double w = ds[i * len + j];
            if (gq != nullptr) {
              const double* kj = nk.value.data() + (b + j) * d + col;
              double* gqi = gq + (b + i) * d + col;
              for (std::size_t t = 0; t < dh; ++t) gqi[t] += w * kj[t];
            }
            if (gk != nullptr) {
              const double* qi = nq.value.data() + (b + i) * d + col;
              double* gkj = gk + (b + j) * d + col;
              for (std::size_t t = 0; t < dh; ++t) gkj[t] += w * qi[t];
            }
          }
        }
      }
    }
  });
}

Tensor segment_mean(const Tensor& a, std::span<const std::size_t> offsets) {
  check_offsets("segment_mean", offsets, a.rows());
  require_finite("segment_mean", a);
  const std::size_t n = a.cols(), segs = offsets.size() - 1;
  OpBuilder op("segment_mean", {segs, n}, {&a});
  auto& out = op.out();
  for (std::size_t s = 0; s < segs; ++s) {
    const double inv = 1.0 / static_cast<double>(offsets[s + 1] - offsets[s]);
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r)
      for (std::size_t j = 0; j < n; ++j) out[s * n + j] += a.data()[r * n + j] * inv;
  }
  std::vector<std::size_t> seg(offsets.begin(), offsets.end());
  return op.finish([seg = std::move(seg), n](Node& self) {
    auto g = self.parents[0]->grad_buffer();
    for (std::size_t s = 0; s + 1 < seg.size(); ++s) {
      const double inv = 1.0 / static_cast<double>(seg[s + 1] - seg[s]);
      for (std::size_t r = seg[s]; r < seg[s + 1]; ++r)
        for (std::size_t j = 0; j < n; ++j) g[r * n + j] += self.grad[s * n + j] * inv;
    }
  });
}

double bce_value(double prediction, double target) {
  const double p = std::clamp(prediction, kBceClamp, 1.0 - kBceClamp);
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

Tensor bce_loss(const Tensor& prediction, std::span<const double> target, std::span<const double> weight) {
  const std::size_t n = prediction.size();
  if (prediction.rows() != 1 && prediction.cols() != 1) {
    throw Error(ErrorCode::kShapeMismatch, "bce_loss: prediction must be a vector, got " +
                                               prediction.shape().str());
  }
  if (target.size() != n || weight.size() != n) {
    throw Error(ErrorCode::kShapeMismatch, "bce_loss: " + std::to_string(n) + " predictions, " +
                                               std::to_string(target.size()) + " targets, " +
                                               std::to_string(weight.size()) + " weights");
  }
  if (n == 0) throw Error(ErrorCode::kShapeMismatch, "bce_loss: empty prediction");
  require_finite("bce_loss", prediction);
  OpBuilder op("bce_loss", {1, 1}, {&prediction});
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += weight[i] * bce_value(prediction.data()[i], target[i]);
  op.out()[0] = total / static_cast<double>(n);
  std::vector<double> t(target.begin(), target.end());
  std::vector<double> w(weight.begin(), weight.end());
  return op.finish([t = std::move(t), w = std::move(w), n](Node& self) {
    Node& pp = *self.parents[0];
    auto g = pp.grad_buffer();
    const double scale = self.grad[0] / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Gradient evaluated at the clamped probability.
      const double p = std::clamp(pp.value[i], kBceClamp, 1.0 - kBceClamp);
      g[i] += scale * w[i] * (-t[i] / p + (1.0 - t[i]) / (1.0 - p));
    }
  });
}

}  // namespace mvcon::tg
