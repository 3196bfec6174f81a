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

#include "autograd/tape.h"

#include <algorithm>
#include <cmath>

namespace hnmt {

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kLeaf: return "leaf";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kMatMulNT: return "matmul_nt";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kAddRowBias: return "add_row_bias";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kConcat: return "concat";
    case OpKind::kSliceCols: return "slice_cols";
    case OpKind::kStackRows: return "stack_rows";
    case OpKind::kEmbedding: return "embedding";
    case OpKind::kSoftmaxRows: return "softmax_rows";
    case OpKind::kCrossEntropySum: return "cross_entropy_sum";
    case OpKind::kSum: return "sum";
    case OpKind::kSelectRows: return "select_rows";
  }
  return "?";
}

template <typename T>
const typename Tape<T>::Node& Tape<T>::node(NodeId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size()) {
    throw ValueError("tape: node id " + std::to_string(id) + " out of range");
  }
  return nodes_[id];
}

template <typename T>
NodeId Tape<T>::push(Node n) {
  bool inputs_ready = true;
  for (NodeId in : n.inputs) {
    const Node& src = node(in);
    n.requires_grad = n.requires_grad || src.requires_grad;
    inputs_ready = inputs_ready && src.ready;
  }
  if (n.kind != OpKind::kLeaf && inputs_ready) evaluate(n);
  nodes_.push_back(std::move(n));
  grads_.emplace_back();
  has_grad_.push_back(0);
  return static_cast<NodeId>(nodes_.size() - 1);
}

template <typename T>
NodeId Tape<T>::parameter(std::string name, Tensor<T> value) {
  if (find_parameter(name) >= 0) throw ValueError("tape: duplicate parameter '" + name + "'");
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.ready = true;
  NodeId id = push(std::move(n));
  params_.push_back(id);
  param_names_.push_back(std::move(name));
  return id;
}

template <typename T>
NodeId Tape<T>::input(Tensor<T> value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.ready = true;
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::placeholder(Shape shape, bool requires_grad) {
  Node n;
  n.value = Tensor<T>(std::move(shape));
  n.requires_grad = requires_grad;
  n.ready = false;
  return push(std::move(n));
}

template <typename T>
void Tape<T>::bind(NodeId leaf, Tensor<T> value) {
  node(leaf);
  Node& n = nodes_[leaf];
  if (n.kind != OpKind::kLeaf) throw ValueError("tape: bind target is not a leaf");
  n.value = std::move(value);
  n.ready = true;
}

template <typename T>
Tensor<T>& Tape<T>::mutable_leaf(NodeId id) {
  node(id);
  if (nodes_[id].kind != OpKind::kLeaf) throw ValueError("tape: node is not a leaf");
  return nodes_[id].value;
}

template <typename T>
NodeId Tape<T>::find_parameter(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (param_names_[i] == name) return params_[i];
  return -1;
}

#define HNMT_OP(kind_, ...)          \
  Node n;                            \
  n.kind = OpKind::kind_;            \
  n.inputs = {__VA_ARGS__};

template <typename T>
NodeId Tape<T>::matmul(NodeId a, NodeId b) {
  HNMT_OP(kMatMul, a, b)
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::matmul_nt(NodeId a, NodeId b) {
  HNMT_OP(kMatMulNT, a, b)
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::add(NodeId a, NodeId b) {
  HNMT_OP(kAdd, a, b)
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::sub(NodeId a, NodeId b) {
  HNMT_OP(kSub, a, b)
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::mul(NodeId a, NodeId b) {
  HNMT_OP(kMul, a, b)
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::scale(NodeId a, T factor) {
  HNMT_OP(kScale, a)
  n.scalar = factor;
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::add_row_bias(NodeId a, NodeId bias) {
  HNMT_OP(kAddRowBias, a, bias)
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::tanh(NodeId a) {
  HNMT_OP(kTanh, a)
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::sigmoid(NodeId a) {
  HNMT_OP(kSigmoid, a)
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::concat(std::span<const NodeId> parts, int axis) {
  Node n;
  n.kind = OpKind::kConcat;
  n.inputs.assign(parts.begin(), parts.end());
  n.axis = axis;
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::slice_cols(NodeId a, std::size_t begin, std::size_t end) {
  HNMT_OP(kSliceCols, a)
  n.begin = begin;
  n.end = end;
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::stack_rows(std::span<const NodeId> inputs, std::vector<RowRef> rows) {
  Node n;
  n.kind = OpKind::kStackRows;
  n.inputs.assign(inputs.begin(), inputs.end());
  if (n.inputs.empty()) throw DimensionError("stack_rows: no inputs");
  n.rows = std::move(rows);
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::embedding(NodeId table, std::vector<std::int32_t> ids) {
  HNMT_OP(kEmbedding, table)
  n.ids = std::move(ids);
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::softmax_rows(NodeId a, std::shared_ptr<const Mask> mask) {
  HNMT_OP(kSoftmaxRows, a)
  n.mask = std::move(mask);
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::cross_entropy_sum(NodeId logits, std::vector<std::int32_t> targets,
                                  std::vector<T> weights) {
  HNMT_OP(kCrossEntropySum, logits)
  n.ids = std::move(targets);
  n.weights = std::move(weights);
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::sum(NodeId a) {
  HNMT_OP(kSum, a)
  return push(std::move(n));
}

template <typename T>
NodeId Tape<T>::select_rows(std::vector<std::uint8_t> keep_a, NodeId a, NodeId b) {
  HNMT_OP(kSelectRows, a, b)
  n.flags = std::move(keep_a);
  return push(std::move(n));
}

#undef HNMT_OP

template <typename T>
void Tape<T>::evaluate(Node& n) {
  auto in = [&](std::size_t k) -> const Tensor<T>& { return nodes_[n.inputs[k]].value; };
  switch (n.kind) {
    case OpKind::kLeaf:
      return;
    case OpKind::kMatMul:
      n.value = hnmt::matmul(in(0), in(1));
      break;
    case OpKind::kMatMulNT:
      n.value = hnmt::matmul_nt(in(0), in(1));
      break;
    case OpKind::kAdd:
      n.value = hnmt::add(in(0), in(1));
      break;
    case OpKind::kSub:
      n.value = hnmt::sub(in(0), in(1));
      break;
    case OpKind::kMul:
      n.value = hnmt::mul(in(0), in(1));
      break;
    case OpKind::kScale:
      n.value = hnmt::scale(in(0), n.scalar);
      break;
    case OpKind::kAddRowBias:
      n.value = hnmt::add_row_bias(in(0), in(1));
      break;
    case OpKind::kTanh:
      n.value = hnmt::tanh(in(0));
      break;
    case OpKind::kSigmoid:
      n.value = hnmt::sigmoid(in(0));
      break;
    case OpKind::kConcat: {
      std::vector<Tensor<T>> parts;
      parts.reserve(n.inputs.size());
      for (std::size_t k = 0; k < n.inputs.size(); ++k) parts.push_back(in(k));
      n.value = hnmt::concat<T>(std::span<const Tensor<T>>(parts), n.axis);
      break;
    }
    case OpKind::kSliceCols:
      n.value = hnmt::slice_cols(in(0), n.begin, n.end);
      break;
    case OpKind::kStackRows: {
      const std::size_t cols = in(0).cols();
      Tensor<T> out = Tensor<T>::zeros(n.rows.size(), cols);
      for (std::size_t r = 0; r < n.rows.size(); ++r) {
        const RowRef ref = n.rows[r];
        if (ref.input < 0 || static_cast<std::size_t>(ref.input) >= n.inputs.size()) {
          throw DimensionError("stack_rows: operand index out of range");
        }
        const Tensor<T>& src = in(ref.input);
        if (src.cols() != cols || ref.row < 0 || static_cast<std::size_t>(ref.row) >= src.rows()) {
          throw DimensionError("stack_rows: row " + std::to_string(ref.row) + " of " +
                               shape_string(src.shape()) + " does not fit " +
                               std::to_string(cols) + " columns");
        }
        auto s = src.row(ref.row);
        std::copy(s.begin(), s.end(), out.data() + r * cols);
      }
      n.value = std::move(out);
      break;
    }
    case OpKind::kEmbedding: {
      const Tensor<T>& table = in(0);
      require_matrix(table, "embedding");
      const std::size_t cols = table.cols();
      Tensor<T> out = Tensor<T>::zeros(n.ids.size(), cols);
      for (std::size_t r = 0; r < n.ids.size(); ++r) {
        const auto id = n.ids[r];
        if (id < 0 || static_cast<std::size_t>(id) >= table.rows()) {
          throw ValueError("embedding: token id " + std::to_string(id) +
                           " out of range for vocabulary of " + std::to_string(table.rows()));
        }
        auto s = table.row(id);
        std::copy(s.begin(), s.end(), out.data() + r * cols);
      }
      n.value = std::move(out);
      break;
    }
    case OpKind::kSoftmaxRows:
      n.value = hnmt::softmax_rows(in(0), n.mask.get());
      break;
    case OpKind::kCrossEntropySum: {
      const Tensor<T>& logits = in(0);
      require_matrix(logits, "cross_entropy_sum");
      if (n.ids.size() != logits.rows() || n.weights.size() != logits.rows()) {
        throw DimensionError("cross_entropy_sum: " + std::to_string(n.ids.size()) +
                             " targets for logits " + shape_string(logits.shape()));
      }
      n.aux = hnmt::log_softmax_rows(logits);
      T total = T(0);
      for (std::size_t r = 0; r < n.ids.size(); ++r) {
        const auto t = n.ids[r];
        if (t < 0 || static_cast<std::size_t>(t) >= logits.cols()) {
          throw ValueError("cross_entropy_sum: target id " + std::to_string(t) + " out of range");
        }
        if (n.weights[r] != T(0)) total += n.weights[r] * -n.aux(r, t);
      }
      n.value = Tensor<T>(Shape{1, 1}, {total});
      break;
    }
    case OpKind::kSum:
      n.value = Tensor<T>(Shape{1, 1}, {hnmt::sum(in(0))});
      break;
    case OpKind::kSelectRows: {
      const Tensor<T>& a = in(0);
      const Tensor<T>& b = in(1);
      if (a.shape() != b.shape() || n.flags.size() != a.rows()) {
        throw DimensionError("select_rows: operands " + shape_string(a.shape()) + " and " +
                             shape_string(b.shape()) + " with " + std::to_string(n.flags.size()) +
                             " row flags");
      }
      Tensor<T> out = b;
      for (std::size_t r = 0; r < n.flags.size(); ++r) {
        if (!n.flags[r]) continue;
        auto s = a.row(r);
        std::copy(s.begin(), s.end(), out.data() + r * a.cols());
      }
      n.value = std::move(out);
      break;
    }
  }
  ensure_finite(n.value, op_name(n.kind));
  n.ready = true;
}

template <typename T>
void Tape<T>::forward() {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    if (n.kind == OpKind::kLeaf) {
      if (!n.ready) throw ValueError("tape: leaf " + std::to_string(i) + " is unbound");
      continue;
    }
    evaluate(n);
  }
}

template <typename T>
const Tensor<T>& Tape<T>::value(NodeId id) const {
  const Node& n = node(id);
  if (!n.ready) throw ValueError("tape: node " + std::to_string(id) + " has not been evaluated");
  return n.value;
}

template <typename T>
void Tape<T>::zero_grads() {
  for (auto& g : grads_) g = Tensor<T>();
  std::fill(has_grad_.begin(), has_grad_.end(), std::uint8_t{0});
}

template <typename T>
void Tape<T>::accumulate(NodeId id, const Tensor<T>& g) {
  Tensor<T>& acc = grads_[id];
  if (!has_grad_[id]) {
    acc = g;
    has_grad_[id] = 1;
    return;
  }
  if (acc.shape() != g.shape()) {
    throw DimensionError("tape: gradient shape " + shape_string(g.shape()) +
                         " does not match node shape " + shape_string(acc.shape()));
  }
  T* dst = acc.data();
  const T* src = g.data();
  for (std::size_t i = 0; i < acc.size(); ++i) dst[i] += src[i];
}

template <typename T>
void Tape<T>::accumulate_move(NodeId id, Tensor<T>&& g) {
  if (!has_grad_[id]) {
    grads_[id] = std::move(g);
    has_grad_[id] = 1;
    return;
  }
  accumulate(id, g);
}

template <typename T>
void Tape<T>::seed(NodeId id, const Tensor<T>& grad) {
  const Node& n = node(id);
  if (grad.shape() != n.value.shape()) {
    throw DimensionError("tape: seed shape " + shape_string(grad.shape()) +
                         " does not match node shape " + shape_string(n.value.shape()));
  }
  accumulate(id, grad);
}

template <typename T>
Tensor<T> Tape<T>::grad(NodeId id) const {
  const Node& n = node(id);
  if (!has_grad_[id]) return Tensor<T>(n.value.shape());
  return grads_[id];
}

template <typename T>
void Tape<T>::backward_range(std::size_t begin, std::size_t end) {
  if (begin > end || end > nodes_.size()) throw ValueError("tape: backward range out of bounds");
  for (std::size_t i = end; i-- > begin;) backprop(i);
}

template <typename T>
void Tape<T>::backward(NodeId loss) {
  const Node& n = node(loss);
  if (n.value.size() != 1) {
    throw DimensionError("tape: loss must be scalar, got shape " + shape_string(n.value.shape()));
  }
  zero_grads();
  seed(loss, Tensor<T>(n.value.shape(), {T(1)}));
  backward_range(0, static_cast<std::size_t>(loss) + 1);
}

template <typename T>
void Tape<T>::backprop(std::size_t id) {
  Node& n = nodes_[id];
  if (n.kind == OpKind::kLeaf || !n.requires_grad) return;
  if (!has_grad_[id]) return;  // nothing flowed here
  const Tensor<T>& g = grads_[id];
  auto wants = [&](std::size_t k) { return nodes_[n.inputs[k]].requires_grad; };
  auto in = [&](std::size_t k) -> const Tensor<T>& { return nodes_[n.inputs[k]].value; };

  switch (n.kind) {
    case OpKind::kLeaf:
      break;
    case OpKind::kMatMul:
      if (wants(0)) accumulate_move(n.inputs[0], hnmt::matmul_nt(g, in(1)));
      if (wants(1)) accumulate_move(n.inputs[1], hnmt::matmul_tn(in(0), g));
      break;
    case OpKind::kMatMulNT:
      if (wants(0)) accumulate_move(n.inputs[0], hnmt::matmul(g, in(1)));
      if (wants(1)) accumulate_move(n.inputs[1], hnmt::matmul_tn(g, in(0)));
      break;
    case OpKind::kAdd:
      if (wants(0)) accumulate(n.inputs[0], g);
      if (wants(1)) accumulate(n.inputs[1], g);
      break;
    case OpKind::kSub:
      if (wants(0)) accumulate(n.inputs[0], g);
      if (wants(1)) accumulate_move(n.inputs[1], hnmt::scale(g, T(-1)));
      break;
    case OpKind::kMul:
      if (wants(0)) accumulate_move(n.inputs[0], hnmt::mul(g, in(1)));
      if (wants(1)) accumulate_move(n.inputs[1], hnmt::mul(g, in(0)));
      break;
    case OpKind::kScale:
      if (wants(0)) accumulate_move(n.inputs[0], hnmt::scale(g, n.scalar));
      break;
    case OpKind::kAddRowBias:
      if (wants(0)) accumulate(n.inputs[0], g);
      if (wants(1)) {
        Tensor<T> gb(in(1).shape());
        const std::size_t cols = g.cols();
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < cols; ++c) gb[c] += g(r, c);
        accumulate_move(n.inputs[1], std::move(gb));
      }
      break;
    case OpKind::kTanh:
      if (wants(0)) {
        Tensor<T> gx = g;
        const T* y = n.value.data();
        T* d = gx.data();
        for (std::size_t i = 0; i < gx.size(); ++i) d[i] *= T(1) - y[i] * y[i];
        accumulate_move(n.inputs[0], std::move(gx));
      }
      break;
    case OpKind::kSigmoid:
      if (wants(0)) {
        Tensor<T> gx = g;
        const T* y = n.value.data();
        T* d = gx.data();
        for (std::size_t i = 0; i < gx.size(); ++i) d[i] *= y[i] * (T(1) - y[i]);
        accumulate_move(n.inputs[0], std::move(gx));
      }
      break;
    case OpKind::kConcat: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const Tensor<T>& part = in(k);
        if (part.size() == 0) continue;
        if (n.axis == 0) {
          if (wants(k)) accumulate_move(n.inputs[k], hnmt::slice_rows(g, offset, offset + part.rows()));
          offset += part.rows();
        } else {
          if (wants(k)) accumulate_move(n.inputs[k], hnmt::slice_cols(g, offset, offset + part.cols()));
          offset += part.cols();
        }
      }
      break;
    }
    case OpKind::kSliceCols:
      if (wants(0)) {
        const Tensor<T>& src = in(0);
        Tensor<T> gx(src.shape());
        const std::size_t w = n.end - n.begin;
        for (std::size_t r = 0; r < src.rows(); ++r)
          for (std::size_t c = 0; c < w; ++c) gx(r, n.begin + c) = g(r, c);
        accumulate_move(n.inputs[0], std::move(gx));
      }
      break;
    case OpKind::kStackRows: {
      // One scatter buffer per operand so each operand gets a single
      // accumulate, in operand order.
      std::vector<Tensor<T>> parts(n.inputs.size());
      for (std::size_t r = 0; r < n.rows.size(); ++r) {
        const RowRef ref = n.rows[r];
        if (!wants(ref.input)) continue;
        Tensor<T>& buf = parts[ref.input];
        if (buf.shape() != in(ref.input).shape()) buf = Tensor<T>(in(ref.input).shape());
        auto src = g.row(r);
        auto dst = buf.row(ref.row);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
      }
      for (std::size_t k = 0; k < parts.size(); ++k)
        if (wants(k) && parts[k].shape() == in(k).shape()) accumulate_move(n.inputs[k], std::move(parts[k]));
      break;
    }
    case OpKind::kEmbedding:
      if (wants(0)) {
        Tensor<T> gt(in(0).shape());
        for (std::size_t r = 0; r < n.ids.size(); ++r) {
          auto src = g.row(r);
          auto dst = gt.row(n.ids[r]);
          for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
        }
        accumulate_move(n.inputs[0], std::move(gt));
      }
      break;
    case OpKind::kSoftmaxRows:
      if (wants(0)) {
        const Tensor<T>& y = n.value;
        Tensor<T> gx(y.shape());
        for (std::size_t r = 0; r < y.rows(); ++r) {
          T dot = T(0);
          for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
          for (std::size_t c = 0; c < y.cols(); ++c) gx(r, c) = y(r, c) * (g(r, c) - dot);
        }
        accumulate_move(n.inputs[0], std::move(gx));
      }
      break;
    case OpKind::kCrossEntropySum:
      if (wants(0)) {
        const T upstream = g[0];
        const Tensor<T>& logp = n.aux;
        Tensor<T> gx(logp.shape());
        for (std::size_t r = 0; r < logp.rows(); ++r) {
          const T w = n.weights[r];
          if (w == T(0)) continue;
          const T coef = upstream * w;
          for (std::size_t c = 0; c < logp.cols(); ++c) gx(r, c) = coef * std::exp(logp(r, c));
          gx(r, n.ids[r]) -= coef;
        }
        accumulate_move(n.inputs[0], std::move(gx));
      }
      break;
    case OpKind::kSum:
      if (wants(0)) accumulate_move(n.inputs[0], Tensor<T>(in(0).shape(), std::vector<T>(in(0).size(), g[0])));
      break;
    case OpKind::kSelectRows: {
      const std::size_t cols = n.value.cols();
      if (wants(0)) {
        Tensor<T> ga(n.value.shape());
        for (std::size_t r = 0; r < n.flags.size(); ++r)
          if (n.flags[r]) std::copy(g.row(r).begin(), g.row(r).end(), ga.data() + r * cols);
        accumulate_move(n.inputs[0], std::move(ga));
      }
      if (wants(1)) {
        Tensor<T> gb(n.value.shape());
        for (std::size_t r = 0; r < n.flags.size(); ++r)
          if (!n.flags[r]) std::copy(g.row(r).begin(), g.row(r).end(), gb.data() + r * cols);
        accumulate_move(n.inputs[1], std::move(gb));
      }
      break;
    }
  }
}

template <typename T>
GradientSet<T> Tape<T>::parameter_grads() const {
  GradientSet<T> out;
  for (std::size_t i = 0; i < params_.size(); ++i) out.add(param_names_[i], grad(params_[i]));
  return out;
}

template class Tape<float>;
template class Tape<double>;

}  // namespace hnmt
