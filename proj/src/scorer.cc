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

#include "factrank/scorer.h"

#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "json.hpp"

namespace factrank {

ScorerBackend parse_scorer_backend(std::string_view name) {
  if (name == "lookup") return ScorerBackend::kLookup;
  if (name == "model") return ScorerBackend::kModel;
  throw InputError(fmt::format("unknown scorer backend '{}'", name));
}

std::string_view scorer_backend_name(ScorerBackend backend) {
  return backend == ScorerBackend::kLookup ? "lookup" : "model";
}

void ScorerConfig::validate() const {
  if (max_len < 8) {
    throw InputError(fmt::format("max_len must be at least 8, got {}", max_len));
  }
  if (batch_size < 1) throw InputError("batch_size must be at least 1");
}

void LookupTable::insert(std::string_view premise, std::string_view hypothesis,
                         EntailmentScore score) {
  entries_.insert_or_assign(Key{trim(premise), trim(hypothesis)}, score);
}

std::optional<EntailmentScore> LookupTable::find(
    std::string_view premise, std::string_view hypothesis) const {
  const auto it = entries_.find(Key{trim(premise), trim(hypothesis)});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

LookupTable LookupTable::read_jsonl(const std::filesystem::path& path,
                                    EntailmentScore default_score) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot read lookup table '{}'", path.string()));
  LookupTable table(default_score);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      table.insert(rec.at("premise").get<std::string>(),
                   rec.at("hypothesis").get<std::string>(),
                   EntailmentScore(rec.at("p_entail").get<double>(),
                                   rec.at("p_neutral").get<double>(),
                                   rec.at("p_contra").get<double>()));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(fmt::format("{}: line {}: {}", path.string(), number, e.what()));
    } catch (const InputError& e) {
      throw InputError(fmt::format("{}: line {}: {}", path.string(), number, e.what()));
    }
  }
  return table;
}

void LookupTable::write_jsonl(std::ostream& out) const {
  for (const auto& [key, score] : entries_) {
    nlohmann::ordered_json rec;
    rec["premise"] = key.first;
    rec["hypothesis"] = key.second;
    rec["p_entail"] = score.p_entail();
    rec["p_neutral"] = score.p_neutral();
    rec["p_contra"] = score.p_contra();
    out << rec.dump() << '\n';
  }
}

void LookupTable::write_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  write_jsonl(out);
}

std::vector<EntailmentScore> Scorer::score_batch(
    std::span<const TextPair> pairs) const {
  if (pairs.empty()) throw InputError("score_batch needs at least one pair");
  std::vector<EntailmentScore> scores;
  scores.reserve(pairs.size());
  for (const TextPair& pair : pairs) {
    scores.push_back(score_pair(pair.premise, pair.hypothesis));
  }
  return scores;
}

LookupScorer::LookupScorer(LookupTable table, bool strict, std::string source)
    : table_(std::move(table)), strict_(strict), source_(std::move(source)) {}

EntailmentScore LookupScorer::score_pair(std::string_view premise,
                                         std::string_view hypothesis) const {
  if (auto hit = table_.find(premise, hypothesis)) return *hit;
  if (strict_) {
    throw ScorerError(fmt::format("no lookup entry for pair ('{}', '{}')",
                                  trim(premise), trim(hypothesis)));
  }
  return table_.default_score();
}

std::string LookupScorer::describe() const {
  return fmt::format("lookup:{}", source_);
}

ModelScorer::ModelScorer(TinyEncoder encoder, ScorerConfig config,
                         std::string source)
    : encoder_(std::move(encoder)),
      config_(std::move(config)),
      tokenizer_(encoder_.tokenizer()),
      source_(std::move(source)) {
  config_.validate();
  if (config_.max_len > static_cast<std::size_t>(encoder_.shape().max_positions)) {
    throw ScorerError(fmt::format(
        "max_len {} exceeds the checkpoint's {} positions", config_.max_len,
        encoder_.shape().max_positions));
  }
}

ModelScorer ModelScorer::from_config(const ScorerConfig& config) {
  if (config.backend != ScorerBackend::kModel) {
    throw InputError("ModelScorer needs a model backend config");
  }
  if (config.checkpoint_ref.empty()) {
    throw ScorerError("model scorer needs a checkpoint");
  }
  return ModelScorer(TinyEncoder::load(config.checkpoint_ref), config,
                     config.checkpoint_ref);
}

PairEncoding ModelScorer::encode(std::string_view premise,
                                 std::string_view hypothesis) const {
  return encode_pair(premise, hypothesis, config_.max_len, tokenizer_);
}

EntailmentScore ModelScorer::score_pair(std::string_view premise,
                                        std::string_view hypothesis) const {
  const auto p = encoder_.predict(encode(premise, hypothesis));
  return EntailmentScore(p[0], p[1], p[2]);
}

std::string ModelScorer::describe() const {
  return fmt::format("model:{}", source_);
}

AttentionTensor ModelScorer::attention(std::string_view premise,
                                       std::string_view hypothesis) const {
  if (!config_.emit_attentions) {
    throw InputError("attention export needs emit_attentions in the scorer config");
  }
  return encoder_.attention(encode(premise, hypothesis));
}

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& config) {
  config.validate();
  if (config.backend == ScorerBackend::kModel) {
    return std::make_unique<ModelScorer>(ModelScorer::from_config(config));
  }
  LookupTable table = config.checkpoint_ref.empty()
                          ? LookupTable()
                          : LookupTable::read_jsonl(config.checkpoint_ref);
  return std::make_unique<LookupScorer>(
      std::move(table), config.strict_lookup,
      config.checkpoint_ref.empty() ? "empty" : config.checkpoint_ref);
}

}  // namespace factrank
