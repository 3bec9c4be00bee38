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

// Word-level tokenization with hashed vocabulary buckets. No vocabulary file
// is needed, so checkpoints trained on one corpus score text from any other.

#ifndef FACTRANK_TOKENIZER_H_
#define FACTRANK_TOKENIZER_H_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace factrank {

using TokenId = std::int32_t;

// Any text -> token id function. encode_pair accepts one of these.
using Tokenizer = std::function<std::vector<TokenId>(std::string_view)>;

// Splits on whitespace and isolates ASCII punctuation. Case is preserved.
std::vector<std::string> split_words(std::string_view text);

class HashingTokenizer {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kCls = 1;
  static constexpr TokenId kSep = 2;
  static constexpr TokenId kUnk = 3;  // reserved; hashing never emits it
  static constexpr TokenId kFirstWordId = 4;

  explicit HashingTokenizer(TokenId vocab_size);

  TokenId vocab_size() const { return vocab_size_; }
  TokenId token_id(std::string_view word) const;
  std::vector<TokenId> operator()(std::string_view text) const;

 private:
  TokenId vocab_size_;
};

}  // namespace factrank

#endif  // FACTRANK_TOKENIZER_H_
