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

#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common/errors.h"

namespace hnmt {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

// Dense row-major array. Every kernel in this project works on rank-2
// tensors (matrices); rank-1 is accepted at construction and reads as a
// single row. There are no views: slicing copies.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() : shape_{0, 0} {}

  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(shape_numel(shape_), T(0)) {}

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_numel(shape_) != data_.size()) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor(Shape{rows, cols}); }

  static Tensor filled(std::size_t rows, std::size_t cols, T value) {
    return Tensor(Shape{rows, cols}, std::vector<T>(rows * cols, value));
  }

  // Row-major literal, e.g. Tensor<float>::from_rows({{1, 2}, {3, 4}}).
  static Tensor from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    std::size_t n_rows = rows.size();
    std::size_t n_cols = n_rows == 0 ? 0 : rows.begin()->size();
    std::vector<T> data;
    data.reserve(n_rows * n_cols);
    for (const auto& row : rows) {
      if (row.size() != n_cols) throw DimensionError("ragged rows in tensor literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor(Shape{n_rows, n_cols}, std::move(data));
  }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const { return shape_.size() >= 2 ? shape_[0] : (shape_.empty() ? 0 : 1); }
  std::size_t cols() const { return shape_.size() >= 2 ? shape_[1] : (shape_.empty() ? 0 : shape_[0]); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  // Bit-exact equality, shapes included.
  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

 private:
  Shape shape_;
  std::vector<T> data_;
};

using Mask = Tensor<std::uint8_t>;

enum class UnaryOp { kTanh, kSigmoid };
enum class BinaryOp { kAdd, kSub, kMul };

// Kernels. All are single-threaded with a fixed accumulation order, so equal
// inputs give bit-identical outputs.

// (m x k) * (k x n). Each output element accumulates over k left to right.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b);

// a * b^T: (m x k) * (n x k)^T.
template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b);

// a^T * b: (k x m)^T * (k x n).
template <typename T>
Tensor<T> matmul_tn(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> transpose(const Tensor<T>& a);

// Row-wise softmax with per-row max subtraction. Masked entries (mask == 0)
// come out exactly 0; a row with no unmasked entry is an error.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x, const Mask* mask = nullptr);

// Row-wise log-softmax, no mask.
template <typename T>
Tensor<T> log_softmax_rows(const Tensor<T>& x);

template <typename T>
Tensor<T> elementwise(UnaryOp op, const Tensor<T>& a);

template <typename T>
Tensor<T> elementwise(BinaryOp op, const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  return elementwise(UnaryOp::kTanh, a);
}
template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  return elementwise(UnaryOp::kSigmoid, a);
}
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return elementwise(BinaryOp::kAdd, a, b);
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return elementwise(BinaryOp::kSub, a, b);
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return elementwise(BinaryOp::kMul, a, b);
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor);

// Adds a (1 x n) bias to every row of an (m x n) tensor.
template <typename T>
Tensor<T> add_row_bias(const Tensor<T>& a, const Tensor<T>& bias);

// Concatenation along axis 0 (rows) or 1 (columns). Zero-element parts are
// skipped regardless of their shape.
template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, int axis);

template <typename T>
Tensor<T> concat(std::initializer_list<Tensor<T>> parts, int axis) {
  std::vector<Tensor<T>> v(parts);
  return concat<T>(std::span<const Tensor<T>>(v), axis);
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t begin, std::size_t end);

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, std::size_t begin, std::size_t end);

// Sum of all elements, accumulated in index order.
template <typename T>
T sum(const Tensor<T>& a);

template <typename T>
bool all_finite(const Tensor<T>& a);

// Throws NumericError naming `what` when `a` holds NaN or Inf.
template <typename T>
void ensure_finite(const Tensor<T>& a, const char* what);

// Requires a rank-2 tensor.
template <typename T>
void require_matrix(const Tensor<T>& a, const char* what);

}  // namespace hnmt
