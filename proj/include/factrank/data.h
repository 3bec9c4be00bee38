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

// Loading NLI corpora and summary-correctness triple sets into canonical
// in-memory form, plus the canonical line-delimited on-disk format.
//
// Canonical NLI record, one JSON object per line:
//   {"uid": ..., "premise": ..., "hypothesis": ..., "label": "entailment",
//    "source_tag": ...}        (source_tag optional)
// Canonical triple record:
//   {"id": ..., "source": ..., "correct": ..., "incorrect": ...}
// Files are UTF-8; blank lines are ignored.

#ifndef FACTRANK_DATA_H_
#define FACTRANK_DATA_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "factrank/core.h"

namespace factrank {

enum class CorpusFormat { kCanonicalJsonl, kAnliJsonl, kMnliTsv };
enum class Split { kTrain, kDev, kTest };

CorpusFormat parse_corpus_format(std::string_view name);
std::string_view corpus_format_name(CorpusFormat format);
Split parse_split(std::string_view name);
std::string_view split_name(Split split);

// The label schema registered for a corpus format: anli-jsonl reads
// single-letter labels, the other two read words.
LabelSchema registered_schema(CorpusFormat format);

struct CorpusDescriptor {
  std::string name;
  std::filesystem::path path;
  CorpusFormat format = CorpusFormat::kCanonicalJsonl;
  LabelSchema label_schema = LabelSchema::kMnliWord;
  Split split = Split::kTrain;

  // Descriptor with the format's registered schema.
  static CorpusDescriptor make(std::string name, std::filesystem::path path,
                               CorpusFormat format, Split split = Split::kTrain);

  // Throws InputError when format and label_schema are not a registered
  // combination.
  void validate() const;
};

// A single rejected record.
struct LineIssue {
  std::size_t line;
  std::string message;
};

// Raised when one or more records fail to parse. Lists every bad line.
class ParseError : public InputError {
 public:
  ParseError(const std::filesystem::path& path, std::vector<LineIssue> issues);

  const std::vector<LineIssue>& issues() const { return issues_; }

 private:
  std::vector<LineIssue> issues_;
};

struct LoadedCorpus {
  std::vector<NliExample> examples;
  std::size_t dropped = 0;      // unmappable labels, e.g. MNLI "-"
  std::size_t blank_lines = 0;
  std::size_t header_lines = 0;  // 1 for TSV input
};

// Reads every record, maps labels through the descriptor's schema and keeps
// file order. ANLI records may name the premise "context"; a record's own
// source_tag wins over the descriptor name. MNLI TSV needs a header with
// sentence1, sentence2 and gold_label columns (pairID becomes the uid).
LoadedCorpus load_nli_corpus(const CorpusDescriptor& descriptor);

enum class TripleFormat { kCanonicalJsonl, kTsv };

TripleFormat parse_triple_format(std::string_view name);

struct TripleDataset {
  std::string name;
  std::vector<SummaryTriple> triples;

  std::size_t size() const { return triples.size(); }
};

// Triple ids must be unique; the dataset name is the file stem. The TSV
// variant needs a header with id, source, correct and incorrect columns.
TripleDataset load_sc_triples(const std::filesystem::path& path,
                              TripleFormat format = TripleFormat::kCanonicalJsonl);

// (source, correct) and (source, incorrect). The source is always the
// premise.
std::pair<TextPair, TextPair> triple_to_pairs(const SummaryTriple& triple);

// Concatenates the corpora and applies a seeded shuffle. The result is a
// permutation of the inputs and is identical for identical seeds.
std::vector<NliExample> concat_corpora(
    std::span<const std::vector<NliExample>> corpora, std::uint64_t shuffle_seed);

std::string to_canonical_line(const NliExample& example);
std::string to_canonical_line(const SummaryTriple& triple);
void write_nli_jsonl(std::ostream& out, std::span<const NliExample> examples);
void write_nli_jsonl(const std::filesystem::path& path,
                     std::span<const NliExample> examples);
void write_triples_jsonl(std::ostream& out,
                         std::span<const SummaryTriple> triples);
void write_triples_jsonl(const std::filesystem::path& path,
                         std::span<const SummaryTriple> triples);

}  // namespace factrank

#endif  // FACTRANK_DATA_H_
