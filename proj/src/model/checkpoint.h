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
#include <vector>

#include "model/params.h"

namespace hnmt {

// Binary checkpoint layout, all integers and floats little-endian:
//
//   8 bytes   magic "HNMTCKPT"
//   u32       format version (1)
//   i32 x 4   vocab_size, embed_size, hidden_size, depth
//   u8        variant (0 input feeding, 1 no input feeding)
//   u8        precision (0 float32, 1 float64)
//   f64       dropout
//   u32       tensor count
//   per tensor, in canonical order:
//     u32 name length, name bytes, u32 rank, u64 x rank dims,
//     f32 x numel values
//   optional vocabulary section:
//     4 bytes "VOCB", u32 count, per token: u32 length, bytes
struct Checkpoint {
  ModelParams<float> params;
  std::vector<std::string> vocab;  // id order; empty when absent
};

void save_checkpoint(const std::string& path, const ModelParams<float>& params,
                     const std::vector<std::string>& vocab = {});
// Throws IoError on unreadable or malformed files.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace hnmt
