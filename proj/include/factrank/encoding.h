// Copyright 2026 The factrank Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Premise/hypothesis pair encoding with longest-segment-first truncation.
//
// Layout: [CLS] premise... [SEP] hypothesis... [SEP]

#ifndef FACTRANK_ENCODING_H_
#define FACTRANK_ENCODING_H_

#include <cstddef>
#include <string_view>
#include <vector>

#include "factrank/tokenizer.h"

namespace factrank {

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
  bool operator==(const IndexRange&) const = default;
};

struct PairEncoding {
  static constexpr std::size_t kSpecialCount = 3;

  std::vector<TokenId> token_ids;
  IndexRange premise_span;
  IndexRange hypothesis_span;
  std::vector<std::size_t> special_positions;

  std::size_t length() const { return token_ids.size(); }
  bool operator==(const PairEncoding&) const = default;
};

// Smallest max_len that can hold the specials plus one token per segment.
inline constexpr std::size_t kMinEncodingLength = PairEncoding::kSpecialCount + 2;

// Encodes the pair, truncating when it does not fit: the final token of the
// currently longer segment is removed until the encoding is max_len long
// (equal lengths give up a hypothesis token first). Throws InputError when
// max_len < kMinEncodingLength or a segment tokenizes to nothing.
PairEncoding encode_pair(std::string_view premise, std::string_view hypothesis,
                         std::size_t max_len, const Tokenizer& tokenizer);

}  // namespace factrank

#endif  // FACTRANK_ENCODING_H_
