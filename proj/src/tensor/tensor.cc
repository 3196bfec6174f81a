// Copyright 2026 The HybridNMT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tensor/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hnmt {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

template <typename T>
void require_matrix(const Tensor<T>& a, const char* what) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(what) + ": expected a matrix, got shape " +
                         shape_string(a.shape()));
  }
}

namespace {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

template <typename T>
T sigmoid_scalar(T x) {
  // Split on sign so exp never overflows.
  if (x >= T(0)) {
    T z = std::exp(-x);
    return T(1) / (T(1) + z);
  }
  T z = std::exp(x);
  return z / (T(1) + z);
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul lhs");
  require_matrix(b, "matmul rhs");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  Tensor<T> c = Tensor<T>::zeros(m, n);
  const T* pa = a.data();
  const T* pb = b.data();
  T* pc = c.data();
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = pa[i * k + p];
      const T* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return c;
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a) {
  require_matrix(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  Tensor<T> t = Tensor<T>::zeros(n, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t(j, i) = a(i, j);
  return t;
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(b, "matmul_nt rhs");
  if (a.rank() == 2 && a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: inner dimensions differ, " + shape_string(a.shape()) +
                         " x " + shape_string(b.shape()) + "^T");
  }
  return matmul(a, transpose(b));
}

template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b) {
  require_matrix(a, "matmul_tn lhs");
  if (b.rank() == 2 && a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: inner dimensions differ, " + shape_string(a.shape()) +
                         "^T x " + shape_string(b.shape()));
  }
  return matmul(transpose(a), b);
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x, const Mask* mask) {
  require_matrix(x, "softmax_rows");
  if (mask && mask->shape() != x.shape()) {
    throw DimensionError("softmax_rows: mask shape " + shape_string(mask->shape()) +
                         " does not match input " + shape_string(x.shape()));
  }
  const std::size_t m = x.rows(), n = x.cols();
  Tensor<T> y = Tensor<T>::zeros(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    auto keep = [&](std::size_t j) { return mask == nullptr || (*mask)(i, j) != 0; };
    bool any = false;
    T mx = T(0);
    for (std::size_t j = 0; j < n; ++j) {
      if (!keep(j)) continue;
      if (!any || x(i, j) > mx) mx = x(i, j);
      any = true;
    }
    if (!any) {
      throw ValueError("softmax_rows: row " + std::to_string(i) + " has no unmasked entry");
    }
    T total = T(0);
    for (std::size_t j = 0; j < n; ++j) {
      if (!keep(j)) continue;
      T e = std::exp(x(i, j) - mx);
      y(i, j) = e;
      total += e;
    }
    for (std::size_t j = 0; j < n; ++j) y(i, j) /= total;
  }
  return y;
}

template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& x) {
  require_matrix(x, "log_softmax_rows");
  const std::size_t m = x.rows(), n = x.cols();
  if (n == 0) throw ValueError("log_softmax_rows: zero columns");
  Tensor<T> y = Tensor<T>::zeros(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    auto row = x.row(i);
    T mx = *std::max_element(row.begin(), row.end());
    T total = T(0);
    for (std::size_t j = 0; j < n; ++j) total += std::exp(row[j] - mx);
    T log_z = mx + std::log(total);
    for (std::size_t j = 0; j < n; ++j) y(i, j) = row[j] - log_z;
  }
  return y;
}

template <typename T>
Tensor<T> elementwise(UnaryOp op, const Tensor<T>& a) {
  Tensor<T> out = a;
  switch (op) {
    case UnaryOp::kTanh:
      for (auto& v : out.values()) v = std::tanh(v);
      break;
    case UnaryOp::kSigmoid:
      for (auto& v : out.values()) v = sigmoid_scalar(v);
      break;
  }
  return out;
}

template <typename T>
Tensor<T> elementwise(BinaryOp op, const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "elementwise");
  Tensor<T> out = a;
  auto o = out.values();
  auto r = b.values();
  switch (op) {
    case BinaryOp::kAdd:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] += r[i];
      break;
    case BinaryOp::kSub:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] -= r[i];
      break;
    case BinaryOp::kMul:
      for (std::size_t i = 0; i < o.size(); ++i) o[i] *= r[i];
      break;
  }
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  Tensor<T> out = a;
  for (auto& v : out.values()) v *= factor;
  return out;
}

template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& a, const Tensor<T>& bias) {
  require_matrix(a, "add_row_bias");
  if (bias.size() != a.cols()) {
    throw DimensionError("add_row_bias: bias " + shape_string(bias.shape()) +
                         " does not fit rows of " + shape_string(a.shape()));
  }
  Tensor<T> out = a;
  const std::size_t n = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T* row = out.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) row[j] += bias[j];
  }
  return out;
}

template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, int axis) {
  if (axis != 0 && axis != 1) throw DimensionError("concat: axis must be 0 or 1");
  std::vector<const Tensor<T>*> used;
  for (const auto& p : parts) {
    if (p.size() == 0) continue;
    require_matrix(p, "concat");
    used.push_back(&p);
  }
  if (used.empty()) return Tensor<T>();
  const std::size_t fixed = axis == 0 ? used[0]->cols() : used[0]->rows();
  std::size_t total = 0;
  for (const auto* p : used) {
    const std::size_t other = axis == 0 ? p->cols() : p->rows();
    if (other != fixed) {
      throw DimensionError("concat: incompatible shapes " + shape_string(used[0]->shape()) +
                           " and " + shape_string(p->shape()) + " on axis " +
                           std::to_string(axis));
    }
    total += axis == 0 ? p->rows() : p->cols();
  }
  if (axis == 0) {
    Tensor<T> out = Tensor<T>::zeros(total, fixed);
    T* dst = out.data();
    for (const auto* p : used) dst = std::copy(p->data(), p->data() + p->size(), dst);
    return out;
  }
  Tensor<T> out = Tensor<T>::zeros(fixed, total);
  std::size_t offset = 0;
  for (const auto* p : used) {
    for (std::size_t i = 0; i < fixed; ++i) {
      auto src = p->row(i);
      std::copy(src.begin(), src.end(), out.data() + i * total + offset);
    }
    offset += p->cols();
  }
  return out;
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t begin, std::size_t end) {
  require_matrix(a, "slice_cols");
  if (begin > end || end > a.cols()) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") outside " + shape_string(a.shape()));
  }
  const std::size_t w = end - begin;
  Tensor<T> out = Tensor<T>::zeros(a.rows(), w);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const T* src = a.data() + i * a.cols() + begin;
    std::copy(src, src + w, out.data() + i * w);
  }
  return out;
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, std::size_t begin, std::size_t end) {
  require_matrix(a, "slice_rows");
  if (begin > end || end > a.rows()) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") outside " + shape_string(a.shape()));
  }
  const std::size_t n = a.cols();
  std::vector<T> data(a.data() + begin * n, a.data() + end * n);
  return Tensor<T>(Shape{end - begin, n}, std::move(data));
}

template <typename T>
T sum(const Tensor<T>& a) {
  T total = T(0);
  for (auto v : a.values()) total += v;
  return total;
}

template <typename T>
bool all_finite(const Tensor<T>& a) {
  for (auto v : a.values())
    if (!std::isfinite(v)) return false;
  return true;
}

template <typename T>
void ensure_finite(const Tensor<T>& a, const char* what) {
  if (!all_finite(a)) {
    throw NumericError(std::string("non-finite value produced by ") + what + " (shape " +
                       shape_string(a.shape()) + ")");
  }
}

#define HNMT_INSTANTIATE_TENSOR_OPS(T)                                              \
  template void require_matrix(const Tensor<T>&, const char*);                     \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> matmul_tn(const Tensor<T>&, const Tensor<T>&);                \
  template Tensor<T> transpose(const Tensor<T>&);                                  \
  template Tensor<T> softmax_rows(const Tensor<T>&, const Mask*);                  \
  template Tensor<T> log_softmax_rows(const Tensor<T>&);                           \
  template Tensor<T> elementwise(UnaryOp, const Tensor<T>&);                       \
  template Tensor<T> elementwise(BinaryOp, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> scale(const Tensor<T>&, T);                                   \
  template Tensor<T> add_row_bias(const Tensor<T>&, const Tensor<T>&);             \
  template Tensor<T> concat(std::span<const Tensor<T>>, int);                      \
  template Tensor<T> slice_cols(const Tensor<T>&, std::size_t, std::size_t);       \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);       \
  template T sum(const Tensor<T>&);                                                \
  template bool all_finite(const Tensor<T>&);                                      \
  template void ensure_finite(const Tensor<T>&, const char*);

HNMT_INSTANTIATE_TENSOR_OPS(float)
HNMT_INSTANTIATE_TENSOR_OPS(double)

#undef HNMT_INSTANTIATE_TENSOR_OPS

}  // namespace hnmt
