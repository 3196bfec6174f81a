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
#include <string>

namespace hnmt {

// Reserved vocabulary ids.
inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kBosId = 1;
inline constexpr std::int32_t kEosId = 2;
inline constexpr std::int32_t kUnkId = 3;
inline constexpr std::int32_t kNumReservedIds = 4;

// Whether the decoder's first layer also consumes the previous step's
// attentional state. With input feeding the decoder steps are serial.
enum class FeedVariant { kInputFeeding, kNoInputFeeding };

enum class Precision { kFloat32, kFloat64 };

std::string to_string(FeedVariant v);
FeedVariant parse_feed_variant(const std::string& s);
std::string to_string(Precision p);
Precision parse_precision(const std::string& s);

struct ModelConfig {
  int vocab_size = 1000;
  int embed_size = 32;
  int hidden_size = 64;
  int depth = 2;  // stacked LSTM layers per side
  FeedVariant variant = FeedVariant::kNoInputFeeding;
  double dropout = 0.3;
  Precision precision = Precision::kFloat32;

  // Throws ConfigError.
  void validate() const;

  int decoder_input_width() const {
    return variant == FeedVariant::kInputFeeding ? embed_size + hidden_size : embed_size;
  }

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace hnmt
