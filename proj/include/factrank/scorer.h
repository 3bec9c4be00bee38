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

// The scoring contract: (premise, hypothesis) -> EntailmentScore, backed by
// either a lookup table (tests, oracles, precomputed scores) or a trained
// encoder checkpoint.

#ifndef FACTRANK_SCORER_H_
#define FACTRANK_SCORER_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "factrank/attention.h"
#include "factrank/core.h"
#include "factrank/encoder.h"
#include "factrank/encoding.h"

namespace factrank {

enum class ScorerBackend { kLookup, kModel };

ScorerBackend parse_scorer_backend(std::string_view name);
std::string_view scorer_backend_name(ScorerBackend backend);

struct ScorerConfig {
  static constexpr std::size_t kDefaultMaxLen = 128;

  ScorerBackend backend = ScorerBackend::kLookup;
  // Lookup: path of a table file (empty = empty table). Model: checkpoint
  // directory.
  std::string checkpoint_ref;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t batch_size = 16;
  bool emit_attentions = false;
  // Lookup only: a pair missing from the table is a ScorerError instead of
  // scoring as default_score.
  bool strict_lookup = false;

  // max_len >= 8, batch_size >= 1.
  void validate() const;
};

// Exact (premise, hypothesis) -> score table. Keys are trimmed.
//
// File form, one JSON object per line:
//   {"premise": ..., "hypothesis": ..., "p_entail": ..., "p_neutral": ...,
//    "p_contra": ...}
class LookupTable {
 public:
  explicit LookupTable(EntailmentScore default_score = EntailmentScore::uniform())
      : default_score_(default_score) {}

  // Replaces any existing entry for the pair.
  void insert(std::string_view premise, std::string_view hypothesis,
              EntailmentScore score);
  std::optional<EntailmentScore> find(std::string_view premise,
                                      std::string_view hypothesis) const;

  const EntailmentScore& default_score() const { return default_score_; }
  std::size_t size() const { return entries_.size(); }

  static LookupTable read_jsonl(const std::filesystem::path& path,
                                EntailmentScore default_score = EntailmentScore::uniform());
  void write_jsonl(std::ostream& out) const;
  void write_jsonl(const std::filesystem::path& path) const;

 private:
  using Key = std::pair<std::string, std::string>;
  std::map<Key, EntailmentScore> entries_;
  EntailmentScore default_score_;
};

class Scorer {
 public:
  virtual ~Scorer() = default;

  virtual EntailmentScore score_pair(std::string_view premise,
                                     std::string_view hypothesis) const = 0;

  // Element i equals score_pair(pairs[i]). Throws InputError on an empty
  // list.
  virtual std::vector<EntailmentScore> score_batch(
      std::span<const TextPair> pairs) const;

  // Short provenance label, e.g. "lookup:table.jsonl".
  virtual std::string describe() const = 0;
};

class LookupScorer : public Scorer {
 public:
  explicit LookupScorer(LookupTable table, bool strict = false,
                        std::string source = "memory");

  EntailmentScore score_pair(std::string_view premise,
                             std::string_view hypothesis) const override;
  std::string describe() const override;

  const LookupTable& table() const { return table_; }

 private:
  LookupTable table_;
  bool strict_;
  std::string source_;
};

// Scores pairs with a TinyEncoder. Inference has no dropout or other
// randomness, so identical inputs give bit-identical scores.
class ModelScorer : public Scorer {
 public:
  ModelScorer(TinyEncoder encoder, ScorerConfig config,
              std::string source = "memory");

  // Loads the checkpoint named by config.checkpoint_ref; ScorerError when
  // it cannot be loaded.
  static ModelScorer from_config(const ScorerConfig& config);

  EntailmentScore score_pair(std::string_view premise,
                             std::string_view hypothesis) const override;
  std::string describe() const override;

  PairEncoding encode(std::string_view premise, std::string_view hypothesis) const;

  // Requires config.emit_attentions.
  AttentionTensor attention(std::string_view premise,
                            std::string_view hypothesis) const;

  const TinyEncoder& encoder() const { return encoder_; }
  const ScorerConfig& config() const { return config_; }

 private:
  TinyEncoder encoder_;
  ScorerConfig config_;
  Tokenizer tokenizer_;
  std::string source_;
};

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config);

}  // namespace factrank

#endif  // FACTRANK_SCORER_H_
