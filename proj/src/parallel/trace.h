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
#include <string>
#include <vector>

#include "parallel/placement.h"

namespace hnmt {

enum class EventKind { kCompute, kSend, kRecv, kSync };

std::string to_string(EventKind kind);

// Compute events carry the task label ("bwd:" prefixed for the backward
// sweep); send and recv events carry the message key. Times are steady-clock
// nanoseconds since the start of the run.
struct TraceEvent {
  int device = 0;
  EventKind kind = EventKind::kCompute;
  std::string task;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
  std::uint64_t bytes = 0;
  int peer = -1;  // other end of a send or recv
};

// Executed task graph: labels, devices and direct dependencies.
struct TaskInfo {
  std::string label;
  int device = 0;
  std::vector<std::size_t> deps;
};

struct ExecTrace {
  int n_devices = 0;
  std::vector<TraceEvent> events;  // sorted by (device, start)
  std::vector<TaskInfo> tasks;
  // Parameters each device read, in first-use order.
  std::vector<std::vector<std::string>> touched;

  // device,kind,task,start_ns,end_ns,bytes,peer
  std::string to_csv() const;
  void write_csv(const std::string& path) const;
  std::uint64_t bytes_sent() const;
};

// Each returns human-readable violations; empty means the property holds.
// Events of one device never overlap in time.
std::vector<std::string> check_device_serial(const ExecTrace& trace);
// Every recv has a send with the same key, from its peer, that started first.
std::vector<std::string> check_messages(const ExecTrace& trace);
// No forward compute event starts before the end of its dependencies' compute.
std::vector<std::string> check_dependencies(const ExecTrace& trace);
// Devices only touch parameters the plan assigns to them.
std::vector<std::string> check_param_isolation(const ExecTrace& trace, const PlacementPlan& plan);
std::vector<std::string> check_trace(const ExecTrace& trace, const PlacementPlan& plan);

}  // namespace hnmt
