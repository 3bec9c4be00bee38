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

// Ranking candidate summaries by entailment probability, pairwise accuracy
// over summary-correctness triples, and the probability-ratio analysis of
// incorrect selections.

#ifndef FACTRANK_RANK_EVAL_H_
#define FACTRANK_RANK_EVAL_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factrank/core.h"
#include "factrank/data.h"
#include "factrank/scorer.h"

namespace factrank {

struct RankResult {
  std::vector<EntailmentScore> scores;  // input order
  std::size_t chosen_index = 0;
  std::vector<std::size_t> ordering;    // descending p_entail, ties by index
};

// Ranks precomputed scores. Throws InputError when empty.
RankResult rank_scores(std::vector<EntailmentScore> scores);

RankResult rank_candidates(const Scorer& scorer, std::string_view doc,
                           std::span<const std::string> candidates);

struct TripleOutcome {
  std::string triple_id;
  double n_plus = 0.0;
  double n_minus = 0.0;
  bool correct = false;  // n_minus < n_plus; a tie is incorrect
  double ratio = 1.0;    // n_plus / n_minus, +inf when n_minus = 0 < n_plus

  bool operator==(const TripleOutcome&) const = default;
};

TripleOutcome make_outcome(std::string triple_id, double n_plus, double n_minus);

TripleOutcome judge_triple(const Scorer& scorer, const SummaryTriple& triple);

struct EvalReport {
  std::string dataset_name;
  std::string scorer_label;
  std::vector<TripleOutcome> outcomes;
  std::size_t n_examples = 0;
  std::size_t n_correct = 0;
  double accuracy = 0.0;
  // Free-form provenance (scorer backend, checkpoint, flags).
  std::map<std::string, std::string> provenance;

  // Fills the counts and accuracy from outcomes.
  static EvalReport assemble(std::string dataset_name, std::string scorer_label,
                             std::vector<TripleOutcome> outcomes);
};

// Scores all 2n pairs in one score_batch call and judges each triple in
// dataset order. Any scorer failure propagates; no partial report exists.
EvalReport evaluate_sc(const Scorer& scorer, const TripleDataset& dataset,
                       std::string scorer_label);

// "accuracy = 75.00% (3/4)"
std::string accuracy_line(const EvalReport& report);

struct Histogram {
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
  std::size_t total = 0;
};

// Equal-width bins over [0,1]; each bin is [lo, hi) except the last, which
// is closed. Ratios above 1 (only possible with incorrect_only = false) are
// counted in the last bin.
Histogram ratio_histogram(std::span<const TripleOutcome> outcomes,
                          std::size_t bins = 10, bool incorrect_only = true);

// Ids of incorrect outcomes whose ratio is below threshold, smallest ratio
// first. threshold must lie in (0, 1].
std::vector<std::string> mine_failures(std::span<const TripleOutcome> outcomes,
                                       double threshold = 0.1);

// JSON report document. Serialization is deterministic: equal reports give
// byte-identical text.
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);
void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);

// triple_id, n_plus, n_minus, correct, ratio; tab-separated with a header.
void write_outcomes_tsv(std::ostream& out, const EvalReport& report);
// bin_lo, bin_hi, count.
void write_histogram_tsv(std::ostream& out, const Histogram& histogram);

}  // namespace factrank

#endif  // FACTRANK_RANK_EVAL_H_
