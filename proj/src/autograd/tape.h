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

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tensor/named_tensors.h"
#include "tensor/tensor.h"

namespace hnmt {

using NodeId = std::int32_t;

enum class OpKind : std::uint8_t {
  kLeaf,
  kMatMul,
  kMatMulNT,
  kAdd,
  kSub,
  kMul,
  kScale,
  kAddRowBias,
  kTanh,
  kSigmoid,
  kConcat,
  kSliceCols,
  kStackRows,
  kEmbedding,
  kSoftmaxRows,
  kCrossEntropySum,
  kSum,
  kSelectRows,
};

const char* op_name(OpKind kind);

// Row reference for stack_rows: row `row` of the `input`-th operand.
struct RowRef {
  std::int32_t input;
  std::int32_t row;
};

// Define-by-run tape for reverse-mode differentiation.
//
// Every recorded op is evaluated immediately when its operands have values;
// ops downstream of an unbound placeholder stay pending until forward().
// Node order is topological by construction. Adjoints accumulate (+=), so a
// parameter reused at every timestep collects all its contributions.
//
// A tape is confined to one thread.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) noexcept = default;
  Tape& operator=(Tape&&) noexcept = default;

  // Leaves.
  NodeId parameter(std::string name, Tensor<T> value);
  NodeId input(Tensor<T> value, bool requires_grad = false);
  NodeId constant(Tensor<T> value) { return input(std::move(value), false); }
  NodeId placeholder(Shape shape, bool requires_grad = false);
  void bind(NodeId leaf, Tensor<T> value);

  // Ops.
  NodeId matmul(NodeId a, NodeId b);
  NodeId matmul_nt(NodeId a, NodeId b);  // a * b^T
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, T factor);
  NodeId add_row_bias(NodeId a, NodeId bias);
  NodeId tanh(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId concat(std::span<const NodeId> parts, int axis);
  NodeId concat(std::initializer_list<NodeId> parts, int axis) {
    std::vector<NodeId> v(parts);
    return concat(std::span<const NodeId>(v), axis);
  }
  NodeId slice_cols(NodeId a, std::size_t begin, std::size_t end);
  NodeId stack_rows(std::span<const NodeId> inputs, std::vector<RowRef> rows);
  NodeId embedding(NodeId table, std::vector<std::int32_t> ids);
  NodeId softmax_rows(NodeId a, std::shared_ptr<const Mask> mask = nullptr);
  // sum_r weights[r] * -log softmax(logits)[r][targets[r]], as a 1x1 tensor.
  NodeId cross_entropy_sum(NodeId logits, std::vector<std::int32_t> targets,
                           std::vector<T> weights);
  NodeId sum(NodeId a);
  // Row r is a's row when keep_a[r] != 0, else b's row.
  NodeId select_rows(std::vector<std::uint8_t> keep_a, NodeId a, NodeId b);

  // Re-evaluates every op in order from current leaf values.
  void forward();

  const Tensor<T>& value(NodeId id) const;
  std::size_t size() const { return nodes_.size(); }
  OpKind kind(NodeId id) const { return nodes_.at(id).kind; }
  const std::vector<NodeId>& inputs(NodeId id) const { return nodes_.at(id).inputs; }
  bool requires_grad(NodeId id) const { return nodes_.at(id).requires_grad; }

  // Reverse sweep.
  void zero_grads();
  void seed(NodeId id, const Tensor<T>& grad);
  void backward_range(std::size_t begin, std::size_t end);
  // Zeroes adjoints, seeds the 1x1 loss with 1 and sweeps the whole tape.
  void backward(NodeId loss);
  // Adjoint of a node; zeros of the node's shape if nothing reached it.
  Tensor<T> grad(NodeId id) const;

  // Parameters in registration order.
  std::size_t parameter_count() const { return params_.size(); }
  NodeId parameter_node(std::size_t i) const { return params_[i]; }
  const std::string& parameter_name(std::size_t i) const { return param_names_[i]; }
  NodeId find_parameter(const std::string& name) const;
  GradientSet<T> parameter_grads() const;
  // Overwrites a parameter leaf's value (gradient checking).
  Tensor<T>& mutable_leaf(NodeId id);

 private:
  struct Node {
    OpKind kind = OpKind::kLeaf;
    std::vector<NodeId> inputs;
    Tensor<T> value;
    Tensor<T> aux;  // saved softmax / log-softmax
    bool requires_grad = false;
    bool ready = false;
    // Attributes, used per kind.
    T scalar = T(0);
    int axis = 0;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::vector<std::int32_t> ids;
    std::vector<T> weights;
    std::vector<RowRef> rows;
    std::vector<std::uint8_t> flags;
    std::shared_ptr<const Mask> mask;
  };

  NodeId push(Node node);
  void evaluate(Node& node);
  void backprop(std::size_t id);
  void accumulate(NodeId id, const Tensor<T>& g);
  void accumulate_move(NodeId id, Tensor<T>&& g);
  const Node& node(NodeId id) const;

  std::vector<Node> nodes_;
  std::vector<Tensor<T>> grads_;
  std::vector<std::uint8_t> has_grad_;
  std::vector<NodeId> params_;
  std::vector<std::string> param_names_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace hnmt
