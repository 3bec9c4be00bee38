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

#include "factrank/encoding.h"

#include <fmt/format.h>

#include "factrank/core.h"

namespace factrank {

PairEncoding encode_pair(std::string_view premise, std::string_view hypothesis,
                         std::size_t max_len, const Tokenizer& tokenizer) {
  if (max_len < kMinEncodingLength) {
    throw InputError(fmt::format(
        "max_len {} cannot hold {} special positions and one token per segment",
        max_len, PairEncoding::kSpecialCount));
  }
  std::vector<TokenId> p = tokenizer(premise);
  std::vector<TokenId> h = tokenizer(hypothesis);
  if (p.empty() || h.empty()) {
    throw InputError("premise and hypothesis must each produce a token");
  }

  const std::size_t budget = max_len - PairEncoding::kSpecialCount;
  while (p.size() + h.size() > budget) {
    if (p.size() > h.size()) {
      p.pop_back();
    } else {
      h.pop_back();
    }
  }

  PairEncoding enc;
  enc.token_ids.reserve(p.size() + h.size() + PairEncoding::kSpecialCount);
  enc.token_ids.push_back(HashingTokenizer::kCls);
  enc.token_ids.insert(enc.token_ids.end(), p.begin(), p.end());
  enc.premise_span = {1, 1 + p.size()};
  enc.token_ids.push_back(HashingTokenizer::kSep);
  enc.token_ids.insert(enc.token_ids.end(), h.begin(), h.end());
  enc.hypothesis_span = {enc.premise_span.end + 1,
                         enc.premise_span.end + 1 + h.size()};
  enc.token_ids.push_back(HashingTokenizer::kSep);
  enc.special_positions = {0, enc.premise_span.end, enc.hypothesis_span.end};
  return enc;
}

}  // namespace factrank
