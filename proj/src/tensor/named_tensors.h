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

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tensor/tensor.h"

namespace hnmt {

// Insertion-ordered name -> tensor map. Model parameters and gradient sets
// both use it; the insertion order is the canonical enumeration order used
// by checkpoints and reductions.
template <typename T>
class NamedTensors {
 public:
  void add(std::string name, Tensor<T> value) {
    if (index_.count(name)) throw ValueError("duplicate tensor name '" + name + "'");
    index_.emplace(name, names_.size());
    names_.push_back(std::move(name));
    tensors_.push_back(std::move(value));
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  Tensor<T>& at(const std::string& name) { return tensors_[index_of(name)]; }
  const Tensor<T>& at(const std::string& name) const { return tensors_[index_of(name)]; }

  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValueError("unknown tensor name '" + name + "'");
    return it->second;
  }

  std::size_t size() const { return names_.size(); }
  bool empty() const { return names_.empty(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor<T>& tensor(std::size_t i) { return tensors_[i]; }
  const Tensor<T>& tensor(std::size_t i) const { return tensors_[i]; }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
  }

  // Same names in the same order with the same shapes.
  bool same_layout(const NamedTensors& other) const {
    if (names_ != other.names_) return false;
    for (std::size_t i = 0; i < tensors_.size(); ++i)
      if (tensors_[i].shape() != other.tensors_[i].shape()) return false;
    return true;
  }

  bool operator==(const NamedTensors& other) const {
    return names_ == other.names_ && tensors_ == other.tensors_;
  }

  template <typename U>
  NamedTensors<U> cast() const {
    NamedTensors<U> out;
    for (std::size_t i = 0; i < size(); ++i) out.add(names_[i], tensors_[i].template cast<U>());
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::vector<Tensor<T>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

template <typename T>
using GradientSet = NamedTensors<T>;

}  // namespace hnmt
