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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <string>
#include <unordered_map>

#include "common/errors.h"
#include "tensor/tensor.h"

namespace hnmt {

// Keyed inbox of one virtual device. take() blocks until the key arrives,
// the deadline passes or `abort` is raised, and throws SchedulingError in
// the last two cases.
template <typename T>
class Mailbox {
 public:
  void put(const std::string& key, Tensor<T> value) {
    {
      std::lock_guard lock(mu_);
      box_.emplace(key, std::move(value));
    }
    cv_.notify_all();
  }

  Tensor<T> take(const std::string& key, std::chrono::milliseconds timeout, const std::atomic<bool>& abort,
                 int device) {
    std::unique_lock lock(mu_);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      auto it = box_.find(key);
      if (it != box_.end()) {
        Tensor<T> v = std::move(it->second);
        box_.erase(it);
        return v;
      }
      if (abort.load()) throw SchedulingError("device " + std::to_string(device) + " aborted: another device failed");
      if (cv_.wait_until(lock, deadline) == std::cv_status::timeout && !box_.count(key)) {
        throw SchedulingError("device " + std::to_string(device) + " timed out after " +
                              std::to_string(timeout.count()) + " ms waiting for '" + key + "'");
      }
    }
  }

  void wake() {
    { std::lock_guard lock(mu_); }
    cv_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::unordered_map<std::string, Tensor<T>> box_;
};

}  // namespace hnmt
