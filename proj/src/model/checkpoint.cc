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

#include "model/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "common/errors.h"

namespace hnmt {
namespace {

constexpr char kMagic[8] = {'H', 'N', 'M', 'T', 'C', 'K', 'P', 'T'};
constexpr char kVocabMagic[4] = {'V', 'O', 'C', 'B'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
  template <typename U>
  void le(U v) {
    unsigned char buf[sizeof(U)];
    std::uint64_t bits = 0;
    if constexpr (std::is_floating_point_v<U>) {
      if constexpr (sizeof(U) == 4) bits = std::bit_cast<std::uint32_t>(v);
      else bits = std::bit_cast<std::uint64_t>(v);
    } else {
      bits = static_cast<std::uint64_t>(v);
    }
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
    bytes(buf, sizeof(U));
  }
  void str(const std::string& s) {
    le<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, const std::string& path) : in_(in), path_(path) {}
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), n);
    if (static_cast<std::size_t>(in_.gcount()) != n) fail("truncated file");
  }
  template <typename U>
  U le() {
    unsigned char buf[sizeof(U)];
    bytes(buf, sizeof(U));
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    if constexpr (std::is_floating_point_v<U>) {
      if constexpr (sizeof(U) == 4) return std::bit_cast<float>(static_cast<std::uint32_t>(bits));
      else return std::bit_cast<double>(bits);
    } else {
      return static_cast<U>(bits);
    }
  }
  std::string str(std::size_t limit = 1u << 20) {
    auto n = le<std::uint32_t>();
    if (n > limit) fail("string length out of range");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }
  [[noreturn]] void fail(const std::string& why) {
    throw IoError("checkpoint " + path_ + ": " + why);
  }

 private:
  std::istream& in_;
  std::string path_;
};

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                     const std::vector<std::string>& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  Writer w(out);
  const auto& c = params.config;
  w.bytes(kMagic, sizeof(kMagic));
  w.le<std::uint32_t>(kVersion);
  w.le<std::int32_t>(c.vocab_size);
  w.le<std::int32_t>(c.embed_size);
  w.le<std::int32_t>(c.hidden_size);
  w.le<std::int32_t>(c.depth);
  w.le<std::uint8_t>(c.variant == FeedVariant::kInputFeeding ? 0 : 1);
  w.le<std::uint8_t>(c.precision == Precision::kFloat32 ? 0 : 1);
  w.le<double>(c.dropout);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(params.tensors.size()));
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    const auto& t = params.tensors.tensor(i);
    w.str(params.tensors.name(i));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.le<std::uint64_t>(d);
    for (float v : t.values()) w.le<float>(v);
  }
  if (!vocab.empty()) {
    w.bytes(kVocabMagic, sizeof(kVocabMagic));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(vocab.size()));
    for (const auto& tok : vocab) w.str(tok);
  }
  out.flush();
  if (!out) throw IoError("write to " + path + " failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  Reader r(in, path);
  char magic[8];
  r.bytes(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.fail("bad magic");
  if (r.le<std::uint32_t>() != kVersion) r.fail("unsupported version");
  ModelConfig c;
  c.vocab_size = r.le<std::int32_t>();
  c.embed_size = r.le<std::int32_t>();
  c.hidden_size = r.le<std::int32_t>();
  c.depth = r.le<std::int32_t>();
  c.variant = r.le<std::uint8_t>() == 0 ? FeedVariant::kInputFeeding : FeedVariant::kNoInputFeeding;
  c.precision = r.le<std::uint8_t>() == 0 ? Precision::kFloat32 : Precision::kFloat64;
  c.dropout = r.le<double>();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    r.fail(std::string("bad config header: ") + e.what());
  }
  const auto specs = param_specs(c);
  if (r.le<std::uint32_t>() != specs.size()) r.fail("tensor count does not match the config");
  Checkpoint ck;
  ck.params.config = c;
  for (const auto& spec : specs) {
    if (r.str() != spec.name) r.fail("expected tensor '" + spec.name + "'");
    Shape shape(r.le<std::uint32_t>());
    if (shape.size() != spec.shape.size()) r.fail("bad rank for '" + spec.name + "'");
    for (auto& d : shape) d = r.le<std::uint64_t>();
    if (shape != spec.shape) r.fail("bad shape for '" + spec.name + "'");
    Tensor<float> t(shape);
    for (auto& v : t.values()) v = r.le<float>();
    ck.params.tensors.add(spec.name, std::move(t));
  }
  if (!r.at_end()) {
    char vm[4];
    r.bytes(vm, sizeof(vm));
    if (std::memcmp(vm, kVocabMagic, sizeof(kVocabMagic)) != 0) r.fail("unknown trailing section");
    auto n = r.le<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) ck.vocab.push_back(r.str());
  }
  return ck;
}

}  // namespace hnmt
