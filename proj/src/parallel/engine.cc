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

#include "parallel/engine.h"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include "common/errors.h"
#include "parallel/collectives.h"
#include "parallel/mailbox.h"

namespace hnmt {
namespace {

using Clock = std::chrono::steady_clock;

enum class Kind { kEncCell, kDecCell, kStates, kGatherH, kRelay, kAttention };

struct Task {
  std::string label;
  int device = 0;
  Kind kind = Kind::kEncCell;
  int step = 0;
  int layer = 0;
  int shard = 0;
  std::vector<std::size_t> sentences;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
};

struct Link {
  std::string key;
  int device;  // the other end
};

struct Program {
  std::vector<Task> tasks;
  std::vector<std::vector<std::size_t>> deps;
  // Per task: outputs other devices consume, and inputs this task receives
  // first on its device.
  std::vector<std::vector<Link>> sends;
  std::vector<std::vector<Link>> recvs;
};

std::string cell_label(const std::string& prefix, const char* side, int t, int l) {
  return prefix + side + ".t" + std::to_string(t) + ".l" + std::to_string(l);
}

std::string key_of(const std::string& prefix, const char* side, int t, int l, const char* what) {
  return cell_label(prefix, side, t, l) + "." + what;
}

class ProgramBuilder {
 public:
  ProgramBuilder(const PlacementPlan& plan, const ModelConfig& config) : plan_(plan), config_(config) {}

  // Full model on one device for the sentences of `layout`.
  void add_replica(int device, const BatchLayout& layout) {
    const std::string p = plan_.strategy == Strategy::kDataParallel ? "r" + std::to_string(device) + ":" : "";
    std::vector<int> layers(config_.depth + 1, device);
    add_recurrent(p, layers, device, layout, [&](int t) {
      std::vector<std::size_t> all(layout.batch);
      for (std::size_t b = 0; b < layout.batch; ++b) all[b] = b;
      Task a = task(p + "attn.t" + std::to_string(t), device, Kind::kAttention);
      a.step = t;
      a.sentences = all;
      a.inputs.push_back(key_of(p, "dec", t, config_.depth, "h"));
      for (std::size_t b : all) a.inputs.push_back(p + "S" + std::to_string(b));
      a.outputs.push_back(p + "hc.t" + std::to_string(t));
      push(std::move(a));
      return std::vector<std::string>{p + "hc.t" + std::to_string(t)};
    });
    if (config_.variant == FeedVariant::kInputFeeding) return;
    Task a = task(p + "attn", device, Kind::kAttention);
    for (std::size_t b = 0; b < layout.batch; ++b) a.sentences.push_back(b);
    for (std::size_t t = 0; t < layout.tgt_len; ++t) a.inputs.push_back(key_of(p, "dec", t, config_.depth, "h"));
    for (std::size_t b : a.sentences) a.inputs.push_back(p + "S" + std::to_string(b));
    push(std::move(a));
  }

  // Layers split over devices; attention on plan.attn_devices, sharded by
  // sentence when there are several.
  void add_split(const BatchLayout& layout) {
    const int owner = plan_.state_owner;
    const std::size_t n_shards = std::min(plan_.attn_devices.size(), layout.batch);
    const auto shards = shard_ranges(layout.batch, n_shards);
    auto shard_sentences = [&](std::size_t k) {
      std::vector<std::size_t> s;
      for (std::size_t b = shards[k].first; b < shards[k].second; ++b) s.push_back(b);
      return s;
    };
    add_recurrent("", plan_.layer_device, owner, layout, [&](int t) {
      const std::string top = key_of("", "dec", t, config_.depth, "h");
      const std::string ts = std::to_string(t);
      std::vector<std::string> feed;
      if (plan_.strategy != Strategy::kHybridIF) {
        Task a = task("attn.t" + ts, plan_.attn_devices[0], Kind::kAttention);
        a.step = t;
        a.sentences = shard_sentences(0);
        a.inputs.push_back(top);
        for (std::size_t b : a.sentences) a.inputs.push_back("S" + std::to_string(b));
        a.outputs.push_back("hc.t" + ts);
        feed = a.outputs;
        push(std::move(a));
        return feed;
      }
      Task relay = task("relay.t" + ts, owner, Kind::kRelay);
      relay.step = t;
      relay.inputs.push_back(top);
      for (std::size_t k = 0; k < n_shards; ++k) relay.outputs.push_back("hrow.t" + ts + ".k" + std::to_string(k));
      push(std::move(relay));
      for (std::size_t k = 0; k < n_shards; ++k) {
        const std::string ks = std::to_string(k);
        Task a = task("attn.t" + ts + ".k" + ks, plan_.attn_devices[k], Kind::kAttention);
        a.step = t;
        a.shard = static_cast<int>(k);
        a.sentences = shard_sentences(k);
        a.inputs.push_back("hrow.t" + ts + ".k" + ks);
        for (std::size_t b : a.sentences) a.inputs.push_back("S" + std::to_string(b));
        a.outputs.push_back("hc.t" + ts + ".k" + ks);
        feed.push_back(a.outputs.back());
        push(std::move(a));
      }
      return feed;
    });
    if (config_.variant == FeedVariant::kInputFeeding) return;
    Task gather = task("gatherH", owner, Kind::kGatherH);
    for (std::size_t b = 0; b < layout.batch; ++b) gather.sentences.push_back(b);
    for (std::size_t t = 0; t < layout.tgt_len; ++t) gather.inputs.push_back(key_of("", "dec", t, config_.depth, "h"));
    for (std::size_t b : gather.sentences) gather.outputs.push_back("H" + std::to_string(b));
    push(std::move(gather));
    for (std::size_t k = 0; k < n_shards; ++k) {
      Task a = task("attn.k" + std::to_string(k), plan_.attn_devices[k], Kind::kAttention);
      a.shard = static_cast<int>(k);
      a.sentences = shard_sentences(k);
      for (std::size_t b : a.sentences) a.inputs.push_back("H" + std::to_string(b));
      for (std::size_t b : a.sentences) a.inputs.push_back("S" + std::to_string(b));
      push(std::move(a));
    }
  }

  Program finish() {
    Program p;
    p.tasks = std::move(tasks_);
    const std::size_t n = p.tasks.size();
    p.deps.resize(n);
    p.sends.resize(n);
    p.recvs.resize(n);
    std::unordered_map<std::string, std::size_t> producer;
    std::set<std::pair<std::string, int>> delivered;
    for (std::size_t i = 0; i < n; ++i) {
      const Task& t = p.tasks[i];
      std::set<std::size_t> deps;
      for (const auto& key : t.inputs) {
        auto it = producer.find(key);
        if (it == producer.end()) throw SchedulingError("task '" + t.label + "' reads unproduced value '" + key + "'");
        deps.insert(it->second);
        const int src = p.tasks[it->second].device;
        if (src != t.device && delivered.insert({key, t.device}).second) {
          p.sends[it->second].push_back({key, t.device});
          p.recvs[i].push_back({key, src});
        }
      }
      p.deps[i].assign(deps.begin(), deps.end());
      for (const auto& key : t.outputs) producer[key] = i;
    }
    return p;
  }

 private:
  Task task(std::string label, int device, Kind kind) {
    Task t;
    t.label = std::move(label);
    t.device = device;
    t.kind = kind;
    return t;
  }
  void push(Task t) { tasks_.push_back(std::move(t)); }

  // Encoder cells, the S assembly on `owner` and the decoder cells. After the
  // top decoder cell of each step, input feeding adds the step's attention
  // through `attend`, which returns the keys of the fed-back output.
  template <typename Attend>
  void add_recurrent(const std::string& p, const std::vector<int>& layers, int owner, const BatchLayout& layout,
                     Attend attend) {
    const int depth = config_.depth;
    const int m = static_cast<int>(layout.src_len), n = static_cast<int>(layout.tgt_len);
    auto cell = [&](const char* side, Kind kind, int t, int l, std::vector<std::string> inputs) {
      Task c = task(cell_label(p, side, t, l), layers[l], kind);
      c.step = t;
      c.layer = l;
      c.inputs = std::move(inputs);
      c.outputs = {key_of(p, side, t, l, "h"), key_of(p, side, t, l, "c")};
      if (l < depth) c.outputs.push_back(key_of(p, side, t, l, "up"));
      push(std::move(c));
    };
    for (int t = 0; t < m; ++t)
      for (int l = 1; l <= depth; ++l) {
        std::vector<std::string> in;
        if (l > 1) in.push_back(key_of(p, "enc", t, l - 1, "up"));
        if (t > 0) {
          in.push_back(key_of(p, "enc", t - 1, l, "h"));
          in.push_back(key_of(p, "enc", t - 1, l, "c"));
        }
        cell("enc", Kind::kEncCell, t, l, std::move(in));
      }
    Task states = task(p + "states", owner, Kind::kStates);
    for (int t = 0; t < m; ++t) states.inputs.push_back(key_of(p, "enc", t, depth, "h"));
    for (std::size_t b = 0; b < layout.batch; ++b) {
      states.sentences.push_back(b);
      states.outputs.push_back(p + "S" + std::to_string(b));
    }
    push(std::move(states));
    const bool feeding = config_.variant == FeedVariant::kInputFeeding;
    std::vector<std::string> feed;
    for (int t = 0; t < n; ++t) {
      for (int l = 1; l <= depth; ++l) {
        std::vector<std::string> in;
        if (l == 1) in.insert(in.end(), feed.begin(), feed.end());
        if (l > 1) in.push_back(key_of(p, "dec", t, l - 1, "up"));
        const char* side = t == 0 ? "enc" : "dec";
        const int prev = t == 0 ? m - 1 : t - 1;
        in.push_back(key_of(p, side, prev, l, "h"));
        in.push_back(key_of(p, side, prev, l, "c"));
        cell("dec", Kind::kDecCell, t, l, std::move(in));
      }
      if (feeding) feed = attend(t);
    }
  }

  const PlacementPlan& plan_;
  const ModelConfig& config_;
  std::vector<Task> tasks_;
};

template <typename T>
struct Shared {
  Shared(const PlacementPlan& plan, const ModelParams<T>& params, const Program& program,
         const std::vector<BatchLayout>& layouts, const RunOptions& options)
      : plan(plan), params(params), program(program), layouts(layouts), options(options) {}

  const PlacementPlan& plan;
  const ModelParams<T>& params;
  const Program& program;
  const std::vector<BatchLayout>& layouts;  // one per replica
  RunOptions options;
  std::size_t total_tokens = 0;
  std::vector<std::unique_ptr<Mailbox<T>>> boxes;
  std::atomic<bool> abort{false};
  Clock::time_point t0;
  std::mutex error_mu;
  std::exception_ptr error;

  void fail(std::exception_ptr e) {
    {
      std::lock_guard lock(error_mu);
      if (!error) error = e;
    }
    abort.store(true);
    for (auto& b : boxes) b->wake();
  }
};

template <typename T>
class Device {
 public:
  Device(int id, Shared<T>& shared)
      : id_(id),
        shared_(shared),
        binder_(tape_, shared.params.tensors),
        g_(tape_, binder_, shared.params.config, shared.layouts.at(shared.layouts.size() > 1 ? id : 0),
           shared.options.dropout) {}

  void run() {
    const auto& prog = shared_.program;
    for (std::size_t i = 0; i < prog.tasks.size(); ++i)
      if (prog.tasks[i].device == id_) mine_.push_back(i);
    forward();
    backward();
    reduce();
  }

  int id() const { return id_; }
  T loss_value() const { return loss_ < 0 ? T(0) : tape_.value(loss_)[0]; }
  bool has_loss() const { return loss_ >= 0; }
  const std::vector<TraceEvent>& events() const { return events_; }
  const std::vector<std::string>& touched() const { return binder_.touched(); }
  const GradientSet<T>& reduced() const { return reduced_; }
  bool has_reduced() const { return !reduced_.empty(); }

  Tensor<T> param_grad(const std::string& name) const {
    NodeId node = binder_.find(name);
    return node < 0 ? Tensor<T>(shared_.params.tensors.at(name).shape()) : tape_.grad(node);
  }

 private:
  std::int64_t now() const {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - shared_.t0).count();
  }

  void log(EventKind kind, std::string task, std::int64_t start, std::uint64_t bytes = 0, int peer = -1) {
    events_.push_back({id_, kind, std::move(task), start, now(), bytes, peer});
  }

  void send(int dst, const std::string& key, Tensor<T> value) {
    const std::int64_t start = now();
    const std::uint64_t bytes = value.size() * sizeof(T);
    shared_.boxes.at(dst)->put(key, std::move(value));
    log(EventKind::kSend, key, start, bytes, dst);
  }

  Tensor<T> recv(int src, const std::string& key) {
    const std::int64_t start = now();
    Tensor<T> v = shared_.boxes.at(id_)->take(key, shared_.options.timeout, shared_.abort, id_);
    log(EventKind::kRecv, key, start, v.size() * sizeof(T), src);
    return v;
  }

  static std::string fwd_key(const std::string& key, int dst) { return key + ">" + std::to_string(dst); }
  static std::string grad_key(const std::string& key, int from) { return "grad:" + key + ">" + std::to_string(from); }

  NodeId value(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw SchedulingError("device " + std::to_string(id_) + " has no value '" + key + "'");
    return it->second;
  }

  void forward() {
    const auto& prog = shared_.program;
    for (std::size_t i : mine_) {
      const Task& task = prog.tasks[i];
      Span span{i, 0, 0, {}};
      for (const auto& link : prog.recvs[i]) {
        Tensor<T> v = recv(link.device, fwd_key(link.key, id_));
        NodeId leaf = tape_.input(std::move(v), true);
        values_[link.key] = leaf;
        span.received.push_back({link.key, leaf, link.device});
      }
      const std::int64_t start = now();
      span.begin = tape_.size();
      compute(task);
      span.end = tape_.size();
      log(EventKind::kCompute, task.label, start);
      for (const auto& link : prog.sends[i]) send(link.device, fwd_key(link.key, link.device), tape_.value(value(link.key)));
      spans_.push_back(std::move(span));
    }
    if (terms_.empty()) return;
    const std::int64_t start = now();
    loss_begin_ = tape_.size();
    NodeId sum = terms_[0];
    for (std::size_t i = 1; i < terms_.size(); ++i) sum = tape_.add(sum, terms_[i]);
    loss_ = tape_.scale(sum, T(1) / static_cast<T>(shared_.total_tokens));
    log(EventKind::kCompute, "loss.d" + std::to_string(id_), start);
  }

  void backward() {
    const auto& prog = shared_.program;
    if (loss_ >= 0) {
      const std::int64_t start = now();
      tape_.seed(loss_, Tensor<T>({1, 1}, {T(1)}));
      tape_.backward_range(loss_begin_, tape_.size());
      log(EventKind::kCompute, "bwd:loss.d" + std::to_string(id_), start);
    }
    for (auto it = spans_.rbegin(); it != spans_.rend(); ++it) {
      const Task& task = prog.tasks[it->task];
      for (const auto& link : prog.sends[it->task]) tape_.seed(value(link.key), recv(link.device, grad_key(link.key, link.device)));
      const std::int64_t start = now();
      tape_.backward_range(it->begin, it->end);
      log(EventKind::kCompute, "bwd:" + task.label, start);
      for (const auto& r : it->received) send(r.src, grad_key(r.key, id_), tape_.grad(r.leaf));
    }
  }

  // Sums replicated parameter gradients at the root in device order.
  void reduce() {
    const auto& plan = shared_.plan;
    std::vector<int> group;
    GradientSet<T> mine;
    const auto& names = shared_.params.tensors.names();
    if (plan.strategy == Strategy::kDataParallel && plan.n_devices > 1) {
      for (int d = 0; d < plan.n_devices; ++d) group.push_back(d);
      for (const auto& name : names) mine.add(name, param_grad(name));
    } else if (plan.strategy == Strategy::kHybrid || plan.strategy == Strategy::kHybridIF) {
      std::set<int> shard_devices;
      for (const auto& t : shared_.program.tasks)
        if (t.kind == Kind::kAttention) shard_devices.insert(t.device);
      for (int d : plan.attn_devices)
        if (shard_devices.count(d)) group.push_back(d);
      if (group.size() < 2) return;
      for (const auto& name : names)
        if (part_of(name) == ModelPart::kAttentionSoftmax) mine.add(name, param_grad(name));
    } else {
      return;
    }
    if (std::find(group.begin(), group.end(), id_) == group.end()) return;
    const int root = plan.root;
    if (id_ != root) {
      send(root, "reduce.d" + std::to_string(id_), flatten(mine));
      Tensor<T> all = recv(root, "bcast.d" + std::to_string(id_));
      reduced_ = mine;
      unflatten(all, reduced_);
      return;
    }
    std::vector<GradientSet<T>> sets;
    for (int d : group) {
      if (d == root) {
        sets.push_back(mine);
        continue;
      }
      GradientSet<T> g = mine;
      unflatten(recv(d, "reduce.d" + std::to_string(d)), g);
      sets.push_back(std::move(g));
    }
    const std::int64_t start = now();
    reduced_ = allreduce_grads<T>(sets);
    log(EventKind::kSync, "allreduce", start, reduced_.total_elements() * sizeof(T) * (group.size() - 1));
    for (int d : group)
      if (d != root) send(d, "bcast.d" + std::to_string(d), flatten(reduced_));
  }

  std::vector<NodeId> nodes(const std::vector<std::string>& keys) const {
    std::vector<NodeId> out;
    for (const auto& k : keys) out.push_back(value(k));
    return out;
  }

  void compute(const Task& task) {
    const auto& config = shared_.params.config;
    const BatchLayout& layout = g_.layout();
    const std::string p = shared_.plan.strategy == Strategy::kDataParallel ? "r" + std::to_string(id_) + ":" : "";
    const int t = task.step, l = task.layer;
    const std::size_t hdim = config.hidden_size;
    switch (task.kind) {
      case Kind::kEncCell:
      case Kind::kDecCell: {
        const bool enc = task.kind == Kind::kEncCell;
        const char* side = enc ? "enc" : "dec";
        NodeId x;
        if (l > 1) {
          x = value(key_of(p, side, t, l - 1, "up"));
        } else if (enc) {
          x = g_.source_embedding(t);
        } else {
          NodeId emb = g_.target_embedding(t);
          NodeId feed = -1;
          if (config.variant == FeedVariant::kInputFeeding) {
            std::vector<std::string> fed;
            for (const auto& k : task.inputs)
              if (k.find("hc.t") != std::string::npos) fed.push_back(k);
            if (fed.empty()) {
              feed = g_.zeros(hdim);
            } else {
              auto parts = nodes(fed);
              feed = parts.size() == 1 ? parts[0] : tape_.concat(parts, 0);
            }
          }
          x = g_.decoder_input(emb, feed);
        }
        NodeId hp, cp;
        if (enc && t == 0) {
          hp = cp = g_.zeros(hdim);
        } else {
          const char* prev_side = t == 0 ? "enc" : side;
          const int prev = t == 0 ? static_cast<int>(layout.src_len) - 1 : t - 1;
          hp = value(key_of(p, prev_side, prev, l, "h"));
          cp = value(key_of(p, prev_side, prev, l, "c"));
        }
        auto cell = g_.cell(enc ? Side::kEncoder : Side::kDecoder, l, t, x, hp, cp);
        values_[key_of(p, side, t, l, "h")] = cell.h;
        values_[key_of(p, side, t, l, "c")] = cell.c;
        if (l < config.depth) values_[key_of(p, side, t, l, "up")] = cell.up;
        return;
      }
      case Kind::kStates: {
        auto top = nodes(task.inputs);
        for (std::size_t b : task.sentences) values_[p + "S" + std::to_string(b)] = g_.sentence_states(top, b);
        return;
      }
      case Kind::kGatherH: {
        auto top = nodes(task.inputs);
        for (std::size_t b : task.sentences) {
          std::vector<RowRef> rows;
          for (std::size_t s = 0; s < layout.tgt_lens[b]; ++s)
            rows.push_back({static_cast<std::int32_t>(s), static_cast<std::int32_t>(b)});
          values_["H" + std::to_string(b)] = tape_.stack_rows(top, std::move(rows));
        }
        return;
      }
      case Kind::kRelay: {
        const NodeId top[] = {value(task.inputs[0])};
        const std::size_t n_shards = task.outputs.size();
        const auto shards = shard_ranges(layout.batch, n_shards);
        for (std::size_t k = 0; k < n_shards; ++k) {
          std::vector<RowRef> rows;
          for (std::size_t b = shards[k].first; b < shards[k].second; ++b) rows.push_back({0, static_cast<std::int32_t>(b)});
          values_[task.outputs[k]] = tape_.stack_rows(top, std::move(rows));
        }
        return;
      }
      case Kind::kAttention:
        attention(task, p);
        return;
    }
  }

  void attention(const Task& task, const std::string& p) {
    const BatchLayout& layout = g_.layout();
    std::vector<AttentionSegment> segs;
    std::vector<std::int32_t> targets;
    std::vector<T> weights;
    if (shared_.plan.variant == FeedVariant::kInputFeeding) {
      const NodeId queries = value(task.inputs[0]);
      for (std::size_t b : task.sentences) {
        segs.push_back({value(p + "S" + std::to_string(b)), 1});
        targets.push_back(layout.tgt_out_at[task.step][b]);
        weights.push_back(layout.tgt_keep_at[task.step][b] ? T(1) : T(0));
      }
      NodeId hc = g_.attention(queries, segs);
      values_[task.outputs[0]] = hc;
      terms_.push_back(g_.output_loss(hc, std::move(targets), std::move(weights)));
      return;
    }
    NodeId queries;
    if (shared_.plan.replicated()) {
      std::vector<RowRef> rows;
      for (std::size_t b : task.sentences)
        for (std::size_t t = 0; t < layout.tgt_lens[b]; ++t)
          rows.push_back({static_cast<std::int32_t>(t), static_cast<std::int32_t>(b)});
      std::vector<NodeId> top;
      for (std::size_t t = 0; t < layout.tgt_len; ++t) top.push_back(value(key_of(p, "dec", t, shared_.params.config.depth, "h")));
      queries = tape_.stack_rows(top, std::move(rows));
    } else {
      std::vector<NodeId> parts;
      for (std::size_t b : task.sentences) parts.push_back(value("H" + std::to_string(b)));
      queries = parts.size() == 1 ? parts[0] : tape_.concat(parts, 0);
    }
    for (std::size_t b : task.sentences) {
      for (std::size_t t = 0; t < layout.tgt_lens[b]; ++t) targets.push_back(layout.tgt_out_at[t][b]);
      segs.push_back({value(p + "S" + std::to_string(b)), layout.tgt_lens[b]});
    }
    NodeId hc = g_.attention(queries, segs);
    weights.assign(targets.size(), T(1));
    terms_.push_back(g_.output_loss(hc, std::move(targets), std::move(weights)));
  }

  struct Received {
    std::string key;
    NodeId leaf;
    int src;
  };
  struct Span {
    std::size_t task;
    std::size_t begin, end;
    std::vector<Received> received;
  };

  int id_;
  Shared<T>& shared_;
  Tape<T> tape_;
  ParamBinder<T> binder_;
  GraphBuilder<T> g_;
  std::vector<std::size_t> mine_;
  std::unordered_map<std::string, NodeId> values_;
  std::vector<NodeId> terms_;
  std::vector<Span> spans_;
  std::vector<TraceEvent> events_;
  NodeId loss_ = -1;
  std::size_t loss_begin_ = 0;
  GradientSet<T> reduced_;
};

}  // namespace

template <typename T>
StrategyResult<T> run_strategy(const PlacementPlan& plan, const ModelParams<T>& params, const Batch& batch,
                               const RunOptions& options) {
  const ModelConfig& config = params.config;
  if (config.variant != plan.variant) {
    throw ConfigError(to_string(plan.strategy) + " runs the " +
                      std::string(plan.variant == FeedVariant::kInputFeeding ? "input-feeding" : "no-input-feeding") +
                      " model but the parameters are for the other variant");
  }
  if (static_cast<int>(plan.layer_device.size()) != config.depth + 1) {
    throw ConfigError("placement plan was built for a different depth");
  }
  if (batch.size() == 0) throw ValueError("empty batch");
  batch.validate(config.vocab_size);

  std::vector<BatchLayout> layouts;
  ProgramBuilder builder(plan, config);
  if (plan.strategy == Strategy::kDataParallel) {
    for (const auto& shard : scatter_batch(batch, plan.n_devices)) layouts.push_back(BatchLayout::build(shard));
    for (int d = 0; d < plan.n_devices; ++d) builder.add_replica(d, layouts[d]);
  } else if (plan.strategy == Strategy::kSerial) {
    layouts.push_back(BatchLayout::build(batch));
    builder.add_replica(0, layouts[0]);
  } else {
    layouts.push_back(BatchLayout::build(batch));
    builder.add_split(layouts[0]);
  }
  const Program program = builder.finish();

  Shared<T> shared(plan, params, program, layouts, options);
  shared.total_tokens = batch.target_tokens();
  for (int d = 0; d < plan.n_devices; ++d) shared.boxes.push_back(std::make_unique<Mailbox<T>>());
  std::vector<std::unique_ptr<Device<T>>> devices;
  for (int d = 0; d < plan.n_devices; ++d) devices.push_back(std::make_unique<Device<T>>(d, shared));

  shared.t0 = Clock::now();
  {
    std::vector<std::jthread> threads;
    for (auto& dev : devices) {
      threads.emplace_back([&shared, d = dev.get()] {
        try {
          d->run();
        } catch (...) {
          shared.fail(std::current_exception());
        }
      });
    }
  }
  if (shared.error) std::rethrow_exception(shared.error);

  StrategyResult<T> out;
  out.tokens = shared.total_tokens;
  for (const auto& dev : devices)
    if (dev->has_loss()) out.loss += dev->loss_value();
  const Device<T>& root = *devices[plan.root];
  for (const auto& name : params.tensors.names()) {
    if (root.has_reduced() && root.reduced().contains(name)) {
      out.grads.add(name, root.reduced().at(name));
    } else {
      out.grads.add(name, devices[plan.owners(name).front()]->param_grad(name));
    }
  }

  ExecTrace& trace = out.trace;
  trace.n_devices = plan.n_devices;
  for (const auto& dev : devices) {
    trace.events.insert(trace.events.end(), dev->events().begin(), dev->events().end());
    trace.touched.push_back(dev->touched());
  }
  std::stable_sort(trace.events.begin(), trace.events.end(), [](const TraceEvent& a, const TraceEvent& b) {
    return a.device != b.device ? a.device < b.device : a.start_ns < b.start_ns;
  });
  for (std::size_t i = 0; i < program.tasks.size(); ++i)
    trace.tasks.push_back({program.tasks[i].label, program.tasks[i].device, program.deps[i]});
  return out;
}

template StrategyResult<float> run_strategy<float>(const PlacementPlan&, const ModelParams<float>&, const Batch&,
                                                   const RunOptions&);
template StrategyResult<double> run_strategy<double>(const PlacementPlan&, const ModelParams<double>&, const Batch&,
                                                     const RunOptions&);

}  // namespace hnmt
