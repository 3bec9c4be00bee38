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

#include "factrank/data.h"

#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "factrank/rng.h"
#include "json.hpp"

namespace factrank {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "canonical-jsonl") return CorpusFormat::kCanonicalJsonl;
  if (name == "anli-jsonl") return CorpusFormat::kAnliJsonl;
  if (name == "mnli-tsv") return CorpusFormat::kMnliTsv;
  throw InputError(fmt::format("unknown corpus format '{}'", name));
}

std::string_view corpus_format_name(CorpusFormat format) {
  switch (format) {
    case CorpusFormat::kCanonicalJsonl:
      return "canonical-jsonl";
    case CorpusFormat::kAnliJsonl:
      return "anli-jsonl";
    case CorpusFormat::kMnliTsv:
      return "mnli-tsv";
  }
  return "canonical-jsonl";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "dev") return Split::kDev;
  if (name == "test") return Split::kTest;
  throw InputError(fmt::format("unknown split '{}'", name));
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kDev:
      return "dev";
    case Split::kTest:
      return "test";
  }
  return "train";
}

LabelSchema registered_schema(CorpusFormat format) {
  return format == CorpusFormat::kAnliJsonl ? LabelSchema::kAnliLetter
                                            : LabelSchema::kMnliWord;
}

CorpusDescriptor CorpusDescriptor::make(std::string name,
                                        std::filesystem::path path,
                                        CorpusFormat format, Split split) {
  return CorpusDescriptor{std::move(name), std::move(path), format,
                          registered_schema(format), split};
}

void CorpusDescriptor::validate() const {
  if (label_schema != registered_schema(format)) {
    throw InputError(fmt::format(
        "corpus '{}': format {} cannot be read with label schema {}", name,
        corpus_format_name(format), label_schema_name(label_schema)));
  }
}

namespace {

std::string describe_issues(const std::filesystem::path& path,
                            const std::vector<LineIssue>& issues) {
  std::string out = fmt::format("{}: {} malformed record{}", path.string(),
                                issues.size(), issues.size() == 1 ? "" : "s");
  for (const LineIssue& issue : issues) {
    out += fmt::format("; line {}: {}", issue.line, issue.message);
  }
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot read '{}'", path.string()));
  return in;
}

// Calls fn(line_number, line) for each line, with a trailing CR removed.
template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fn(number, line);
  }
}

bool is_blank(std::string_view line) { return trim(line).empty(); }

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

// Reads a required string field from a JSON record.
std::string require_string(const json& record, std::string_view field) {
  const auto it = record.find(field);
  if (it == record.end()) {
    throw InputError(fmt::format("missing field '{}'", field));
  }
  if (!it->is_string()) {
    throw InputError(fmt::format("field '{}' is not a string", field));
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& record,
                                           std::string_view field) {
  const auto it = record.find(field);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw InputError(fmt::format("field '{}' is not a string", field));
  }
  return it->get<std::string>();
}

json parse_record(const std::string& line) {
  json record;
  try {
    record = json::parse(line);
  } catch (const json::parse_error& e) {
    throw InputError(fmt::format("invalid JSON ({})", e.what()));
  }
  if (!record.is_object()) throw InputError("record is not a JSON object");
  return record;
}

// Column positions of a TSV header.
class TsvHeader {
 public:
  explicit TsvHeader(const std::string& line) {
    const auto names = split_tabs(line);
    for (std::size_t i = 0; i < names.size(); ++i) columns_[names[i]] = i;
  }

  std::optional<std::size_t> find(const std::string& name) const {
    const auto it = columns_.find(name);
    if (it == columns_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t require(const std::filesystem::path& path,
                      const std::string& name) const {
    const auto index = find(name);
    if (!index) {
      throw ParseError(path, {{1, fmt::format("header lacks column '{}'", name)}});
    }
    return *index;
  }

 private:
  std::unordered_map<std::string, std::size_t> columns_;
};

struct RawNliRecord {
  std::string uid;
  std::string premise;
  std::string hypothesis;
  std::string label;
  std::string source_tag;
};

RawNliRecord read_json_nli(const std::string& line, CorpusFormat format,
                           const std::string& default_tag) {
  const json record = parse_record(line);
  RawNliRecord raw;
  raw.uid = require_string(record, "uid");
  if (format == CorpusFormat::kAnliJsonl && !record.contains("premise")) {
    if (!record.contains("context")) {
      throw InputError("missing field 'premise' (or 'context')");
    }
    raw.premise = require_string(record, "context");
  } else {
    raw.premise = require_string(record, "premise");
  }
  raw.hypothesis = require_string(record, "hypothesis");
  raw.label = require_string(record, "label");
  raw.source_tag = optional_string(record, "source_tag").value_or(default_tag);
  return raw;
}

}  // namespace

ParseError::ParseError(const std::filesystem::path& path,
                       std::vector<LineIssue> issues)
    : InputError(describe_issues(path, issues)), issues_(std::move(issues)) {}

LoadedCorpus load_nli_corpus(const CorpusDescriptor& descriptor) {
  descriptor.validate();
  std::ifstream in = open_input(descriptor.path);

  LoadedCorpus corpus;
  std::vector<LineIssue> issues;
  std::unordered_set<std::string> seen_uids;
  std::optional<TsvHeader> header;
  std::size_t premise_col = 0, hypothesis_col = 0, label_col = 0;
  std::optional<std::size_t> uid_col;

  const auto accept = [&](std::size_t number, RawNliRecord raw) {
    NliLabel label;
    try {
      label = map_label(raw.label, descriptor.label_schema);
    } catch (const InputError&) {
      ++corpus.dropped;
      return;
    }
    if (!seen_uids.insert(raw.uid).second) {
      issues.push_back({number, fmt::format("duplicate uid '{}'", raw.uid)});
      return;
    }
    corpus.examples.emplace_back(std::move(raw.uid), raw.premise,
                                 raw.hypothesis, label,
                                 std::move(raw.source_tag));
  };

  for_each_line(in, [&](std::size_t number, const std::string& line) {
    if (is_blank(line)) {
      ++corpus.blank_lines;
      return;
    }
    try {
      if (descriptor.format == CorpusFormat::kMnliTsv) {
        if (!header) {
          header.emplace(line);
          ++corpus.header_lines;
          premise_col = header->require(descriptor.path, "sentence1");
          hypothesis_col = header->require(descriptor.path, "sentence2");
          label_col = header->require(descriptor.path, "gold_label");
          uid_col = header->find("pairID");
          return;
        }
        const auto fields = split_tabs(line);
        const std::size_t needed =
            std::max({premise_col, hypothesis_col, label_col,
                      uid_col.value_or(0)}) + 1;
        if (fields.size() < needed) {
          throw InputError(fmt::format("expected at least {} columns, got {}",
                                       needed, fields.size()));
        }
        RawNliRecord raw{
            uid_col ? fields[*uid_col]
                    : fmt::format("{}-{}", descriptor.name, number),
            fields[premise_col], fields[hypothesis_col], fields[label_col],
            descriptor.name};
        accept(number, std::move(raw));
      } else {
        accept(number, read_json_nli(line, descriptor.format, descriptor.name));
      }
    } catch (const ParseError&) {
      throw;
    } catch (const InputError& e) {
      issues.push_back({number, e.what()});
    }
  });

  if (!issues.empty()) throw ParseError(descriptor.path, std::move(issues));
  return corpus;
}

TripleFormat parse_triple_format(std::string_view name) {
  if (name == "canonical-jsonl") return TripleFormat::kCanonicalJsonl;
  if (name == "triple-tsv") return TripleFormat::kTsv;
  throw InputError(fmt::format("unknown triple format '{}'", name));
}

TripleDataset load_sc_triples(const std::filesystem::path& path,
                              TripleFormat format) {
  std::ifstream in = open_input(path);
  TripleDataset dataset{path.stem().string(), {}};
  std::vector<LineIssue> issues;
  std::unordered_set<std::string> seen;
  std::optional<TsvHeader> header;
  std::array<std::size_t, 4> cols{};

  for_each_line(in, [&](std::size_t number, const std::string& line) {
    if (is_blank(line)) return;
    try {
      std::array<std::string, 4> fields;
      if (format == TripleFormat::kTsv) {
        if (!header) {
          header.emplace(line);
          cols = {header->require(path, "id"), header->require(path, "source"),
                  header->require(path, "correct"),
                  header->require(path, "incorrect")};
          return;
        }
        const auto row = split_tabs(line);
        for (std::size_t i = 0; i < 4; ++i) {
          if (cols[i] >= row.size()) {
            throw InputError(fmt::format("expected at least {} columns, got {}",
                                         cols[i] + 1, row.size()));
          }
          fields[i] = row[cols[i]];
        }
      } else {
        const json record = parse_record(line);
        fields = {require_string(record, "id"),
                  require_string(record, "source"),
                  require_string(record, "correct"),
                  require_string(record, "incorrect")};
      }
      if (!seen.insert(fields[0]).second) {
        throw InputError(fmt::format("duplicate id '{}'", fields[0]));
      }
      dataset.triples.emplace_back(fields[0], fields[1], fields[2], fields[3]);
    } catch (const ParseError&) {
      throw;
    } catch (const InputError& e) {
      issues.push_back({number, e.what()});
    }
  });

  if (!issues.empty()) throw ParseError(path, std::move(issues));
  return dataset;
}

std::pair<TextPair, TextPair> triple_to_pairs(const SummaryTriple& triple) {
  return {TextPair{triple.source(), triple.correct()},
          TextPair{triple.source(), triple.incorrect()}};
}

std::vector<NliExample> concat_corpora(
    std::span<const std::vector<NliExample>> corpora,
    std::uint64_t shuffle_seed) {
  if (corpora.empty()) throw InputError("concat_corpora needs at least one corpus");
  std::vector<NliExample> merged;
  for (const auto& corpus : corpora) {
    merged.insert(merged.end(), corpus.begin(), corpus.end());
  }
  Rng rng(shuffle_seed);
  rng.shuffle(std::span<NliExample>(merged));
  return merged;
}

std::string to_canonical_line(const NliExample& example) {
  ordered_json record;
  record["uid"] = example.uid();
  record["premise"] = example.premise();
  record["hypothesis"] = example.hypothesis();
  record["label"] = label_name(example.label());
  if (!example.source_tag().empty()) record["source_tag"] = example.source_tag();
  return record.dump();
}

std::string to_canonical_line(const SummaryTriple& triple) {
  ordered_json record;
  record["id"] = triple.id();
  record["source"] = triple.source();
  record["correct"] = triple.correct();
  record["incorrect"] = triple.incorrect();
  return record.dump();
}

namespace {

template <typename Range>
void write_lines(std::ostream& out, const Range& items) {
  for (const auto& item : items) out << to_canonical_line(item) << '\n';
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

}  // namespace

void write_nli_jsonl(std::ostream& out, std::span<const NliExample> examples) {
  write_lines(out, examples);
}

void write_nli_jsonl(const std::filesystem::path& path,
                     std::span<const NliExample> examples) {
  std::ofstream out = open_output(path);
  write_lines(out, examples);
}

void write_triples_jsonl(std::ostream& out,
                         std::span<const SummaryTriple> triples) {
  write_lines(out, triples);
}

void write_triples_jsonl(const std::filesystem::path& path,
                         std::span<const SummaryTriple> triples) {
  std::ofstream out = open_output(path);
  write_lines(out, triples);
}

}  // namespace factrank
