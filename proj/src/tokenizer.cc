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

#include "factrank/tokenizer.h"

#include <cctype>

#include <fmt/format.h>

#include "factrank/core.h"

namespace factrank {

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      words.emplace_back(1, ch);
    } else {
      current.push_back(ch);
    }
  }
  flush();
  return words;
}

HashingTokenizer::HashingTokenizer(TokenId vocab_size)
    : vocab_size_(vocab_size) {
  if (vocab_size <= kFirstWordId) {
    throw InputError(fmt::format("vocabulary of {} buckets is too small",
                                 vocab_size));
  }
}

TokenId HashingTokenizer::token_id(std::string_view word) const {
  // 64-bit FNV-1a.
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (char ch : word) {
    hash ^= static_cast<unsigned char>(ch);
    hash *= 0x100000001b3ULL;
  }
  const auto buckets = static_cast<std::uint64_t>(vocab_size_ - kFirstWordId);
  return kFirstWordId + static_cast<TokenId>(hash % buckets);
}

std::vector<TokenId> HashingTokenizer::operator()(std::string_view text) const {
  std::vector<TokenId> ids;
  for (const std::string& word : split_words(text)) ids.push_back(token_id(word));
  return ids;
}

}  // namespace factrank
