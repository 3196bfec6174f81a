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

#include "parallel/trace.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "common/errors.h"

namespace hnmt {

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kCompute: return "compute";
    case EventKind::kSend: return "send";
    case EventKind::kRecv: return "recv";
    case EventKind::kSync: return "sync";
  }
  return "?";
}

std::string ExecTrace::to_csv() const {
  std::ostringstream out;
  out << "device,kind,task,start_ns,end_ns,bytes,peer\n";
  for (const auto& e : events) {
    out << e.device << ',' << to_string(e.kind) << ',' << e.task << ',' << e.start_ns << ',' << e.end_ns << ','
        << e.bytes << ',' << e.peer << '\n';
  }
  return out.str();
}

void ExecTrace::write_csv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open trace file '" + path + "' for writing");
  f << to_csv();
  if (!f) throw IoError("failed writing trace file '" + path + "'");
}

std::uint64_t ExecTrace::bytes_sent() const {
  std::uint64_t n = 0;
  for (const auto& e : events)
    if (e.kind == EventKind::kSend) n += e.bytes;
  return n;
}

std::vector<std::string> check_device_serial(const ExecTrace& trace) {
  std::vector<std::string> out;
  std::map<int, std::vector<const TraceEvent*>> by_device;
  for (const auto& e : trace.events) {
    if (e.end_ns < e.start_ns) out.push_back("event '" + e.task + "' ends before it starts");
    by_device[e.device].push_back(&e);
  }
  for (auto& [device, events] : by_device) {
    std::sort(events.begin(), events.end(),
              [](const TraceEvent* a, const TraceEvent* b) { return a->start_ns < b->start_ns; });
    for (std::size_t i = 1; i < events.size(); ++i) {
      if (events[i]->start_ns < events[i - 1]->end_ns) {
        out.push_back("device " + std::to_string(device) + ": '" + events[i]->task + "' overlaps '" +
                      events[i - 1]->task + "'");
      }
    }
  }
  return out;
}

std::vector<std::string> check_messages(const ExecTrace& trace) {
  std::vector<std::string> out;
  std::map<std::string, const TraceEvent*> sends;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::kSend) continue;
    if (!sends.emplace(e.task, &e).second) out.push_back("message '" + e.task + "' sent twice");
  }
  std::map<std::string, int> received;
  for (const auto& e : trace.events) {
    if (e.kind != EventKind::kRecv) continue;
    if (++received[e.task] > 1) out.push_back("message '" + e.task + "' received twice");
    auto it = sends.find(e.task);
    if (it == sends.end()) {
      out.push_back("recv of '" + e.task + "' on device " + std::to_string(e.device) + " has no send");
      continue;
    }
    const TraceEvent& s = *it->second;
    if (s.device != e.peer || s.peer != e.device) out.push_back("message '" + e.task + "' endpoints disagree");
    if (s.start_ns > e.end_ns) out.push_back("message '" + e.task + "' received before it was sent");
    if (s.bytes != e.bytes) out.push_back("message '" + e.task + "' byte counts disagree");
  }
  for (const auto& [key, s] : sends)
    if (!received.count(key)) out.push_back("message '" + key + "' was never received");
  return out;
}

std::vector<std::string> check_dependencies(const ExecTrace& trace) {
  std::vector<std::string> out;
  std::map<std::string, const TraceEvent*> compute;
  for (const auto& e : trace.events)
    if (e.kind == EventKind::kCompute) compute.emplace(e.task, &e);
  for (const auto& task : trace.tasks) {
    auto it = compute.find(task.label);
    if (it == compute.end()) {
      out.push_back("task '" + task.label + "' has no compute event");
      continue;
    }
    for (std::size_t d : task.deps) {
      const std::string& dep = trace.tasks.at(d).label;
      auto jt = compute.find(dep);
      if (jt == compute.end()) continue;
      if (it->second->start_ns < jt->second->end_ns) {
        out.push_back("task '" + task.label + "' started before dependency '" + dep + "' finished");
      }
    }
  }
  return out;
}

std::vector<std::string> check_param_isolation(const ExecTrace& trace, const PlacementPlan& plan) {
  std::vector<std::string> out;
  for (std::size_t d = 0; d < trace.touched.size(); ++d) {
    for (const auto& name : trace.touched[d]) {
      auto owners = plan.owners(name);
      if (std::find(owners.begin(), owners.end(), static_cast<int>(d)) == owners.end()) {
        out.push_back("device " + std::to_string(d) + " touched '" + name + "'");
      }
    }
  }
  return out;
}

std::vector<std::string> check_trace(const ExecTrace& trace, const PlacementPlan& plan) {
  std::vector<std::string> out;
  for (auto* check : {check_device_serial, check_messages, check_dependencies}) {
    auto v = check(trace);
    out.insert(out.end(), v.begin(), v.end());
  }
  auto v = check_param_isolation(trace, plan);
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

}  // namespace hnmt
