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

#include "factrank/rank_eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"

namespace factrank {

using ordered_json = nlohmann::ordered_json;

RankResult rank_scores(std::vector<EntailmentScore> scores) {
  if (scores.empty()) throw InputError("ranking needs at least one candidate");
  RankResult result;
  result.ordering.resize(scores.size());
  std::iota(result.ordering.begin(), result.ordering.end(), std::size_t{0});
  std::stable_sort(result.ordering.begin(), result.ordering.end(),
                   [&](std::size_t a, std::size_t b) {
                     return scores[a].p_entail() > scores[b].p_entail();
                   });
  result.chosen_index = result.ordering.front();
  result.scores = std::move(scores);
  return result;
}

RankResult rank_candidates(const Scorer& scorer, std::string_view doc,
                           std::span<const std::string> candidates) {
  if (candidates.empty()) throw InputError("ranking needs at least one candidate");
  std::vector<TextPair> pairs;
  pairs.reserve(candidates.size());
  for (const std::string& c : candidates) pairs.push_back({std::string(doc), c});
  return rank_scores(scorer.score_batch(pairs));
}

TripleOutcome make_outcome(std::string triple_id, double n_plus, double n_minus) {
  return TripleOutcome{std::move(triple_id), n_plus, n_minus, n_minus < n_plus,
                       probability_ratio(n_plus, n_minus)};
}

TripleOutcome judge_triple(const Scorer& scorer, const SummaryTriple& triple) {
  const auto [positive, negative] = triple_to_pairs(triple);
  const double n_plus =
      entailment_prob(scorer.score_pair(positive.premise, positive.hypothesis));
  const double n_minus =
      entailment_prob(scorer.score_pair(negative.premise, negative.hypothesis));
  return make_outcome(triple.id(), n_plus, n_minus);
}

EvalReport EvalReport::assemble(std::string dataset_name,
                                std::string scorer_label,
                                std::vector<TripleOutcome> outcomes) {
  EvalReport report;
  report.dataset_name = std::move(dataset_name);
  report.scorer_label = std::move(scorer_label);
  report.outcomes = std::move(outcomes);
  report.n_examples = report.outcomes.size();
  report.n_correct = static_cast<std::size_t>(std::count_if(
      report.outcomes.begin(), report.outcomes.end(),
      [](const TripleOutcome& o) { return o.correct; }));
  report.accuracy = report.n_examples == 0
                        ? 0.0
                        : static_cast<double>(report.n_correct) /
                              static_cast<double>(report.n_examples);
  return report;
}

EvalReport evaluate_sc(const Scorer& scorer, const TripleDataset& dataset,
                       std::string scorer_label) {
  if (dataset.triples.empty()) {
    throw InputError(fmt::format("dataset '{}' has no triples", dataset.name));
  }
  std::vector<TextPair> pairs;
  pairs.reserve(2 * dataset.size());
  for (const SummaryTriple& triple : dataset.triples) {
    auto [positive, negative] = triple_to_pairs(triple);
    pairs.push_back(std::move(positive));
    pairs.push_back(std::move(negative));
  }
  const std::vector<EntailmentScore> scores = scorer.score_batch(pairs);
  if (scores.size() != pairs.size()) {
    throw ScorerError(fmt::format("scorer returned {} scores for {} pairs",
                                  scores.size(), pairs.size()));
  }
  std::vector<TripleOutcome> outcomes;
  outcomes.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    outcomes.push_back(make_outcome(dataset.triples[i].id(),
                                    entailment_prob(scores[2 * i]),
                                    entailment_prob(scores[2 * i + 1])));
  }
  EvalReport report =
      EvalReport::assemble(dataset.name, std::move(scorer_label), std::move(outcomes));
  report.provenance["scorer"] = scorer.describe();
  return report;
}

std::string accuracy_line(const EvalReport& report) {
  return fmt::format("accuracy = {:.2f}% ({}/{})", 100.0 * report.accuracy,
                     report.n_correct, report.n_examples);
}

Histogram ratio_histogram(std::span<const TripleOutcome> outcomes,
                          std::size_t bins, bool incorrect_only) {
  if (bins < 1) throw InputError("histogram needs at least one bin");
  Histogram hist;
  hist.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    hist.bin_edges[i] = static_cast<double>(i) / static_cast<double>(bins);
  }
  hist.counts.assign(bins, 0);
  for (const TripleOutcome& o : outcomes) {
    if (incorrect_only && o.correct) continue;
    // First edge strictly greater than the ratio closes the bin.
    const auto upper =
        std::upper_bound(hist.bin_edges.begin(), hist.bin_edges.end(), o.ratio);
    const auto index = static_cast<std::size_t>(
        std::distance(hist.bin_edges.begin(), upper));
    hist.counts[std::clamp<std::size_t>(index, 1, bins) - 1] += 1;
    ++hist.total;
  }
  return hist;
}

std::vector<std::string> mine_failures(std::span<const TripleOutcome> outcomes,
                                       double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InputError(fmt::format("failure threshold {} outside (0, 1]", threshold));
  }
  std::vector<const TripleOutcome*> hits;
  for (const TripleOutcome& o : outcomes) {
    if (!o.correct && o.ratio < threshold) hits.push_back(&o);
  }
  std::stable_sort(hits.begin(), hits.end(),
                   [](const TripleOutcome* a, const TripleOutcome* b) {
                     return a->ratio < b->ratio;
                   });
  std::vector<std::string> ids;
  ids.reserve(hits.size());
  for (const TripleOutcome* o : hits) ids.push_back(o->triple_id);
  return ids;
}

namespace {

ordered_json ratio_to_json(double ratio) {
  if (std::isinf(ratio)) return "inf";
  return ratio;
}

double ratio_from_json(const nlohmann::json& value) {
  if (value.is_string()) {
    if (value.get<std::string>() == "inf") {
      return std::numeric_limits<double>::infinity();
    }
    throw InputError("ratio must be a number or \"inf\"");
  }
  return value.get<double>();
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  ordered_json doc;
  doc["dataset_name"] = report.dataset_name;
  doc["scorer_label"] = report.scorer_label;
  doc["n_examples"] = report.n_examples;
  doc["n_correct"] = report.n_correct;
  doc["accuracy"] = report.accuracy;
  ordered_json provenance = ordered_json::object();
  for (const auto& [key, value] : report.provenance) provenance[key] = value;
  doc["provenance"] = provenance;
  ordered_json outcomes = ordered_json::array();
  for (const TripleOutcome& o : report.outcomes) {
    ordered_json entry;
    entry["triple_id"] = o.triple_id;
    entry["n_plus"] = o.n_plus;
    entry["n_minus"] = o.n_minus;
    entry["correct"] = o.correct;
    entry["ratio"] = ratio_to_json(o.ratio);
    outcomes.push_back(std::move(entry));
  }
  doc["outcomes"] = std::move(outcomes);
  return doc.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    std::vector<TripleOutcome> outcomes;
    for (const auto& entry : doc.at("outcomes")) {
      TripleOutcome o{entry.at("triple_id").get<std::string>(),
                      entry.at("n_plus").get<double>(),
                      entry.at("n_minus").get<double>(),
                      entry.at("correct").get<bool>(),
                      ratio_from_json(entry.at("ratio"))};
      if (o.correct != (o.n_minus < o.n_plus)) {
        throw InputError(fmt::format(
            "outcome '{}' has a correct flag inconsistent with its scores",
            o.triple_id));
      }
      outcomes.push_back(std::move(o));
    }
    EvalReport report = EvalReport::assemble(
        doc.at("dataset_name").get<std::string>(),
        doc.at("scorer_label").get<std::string>(), std::move(outcomes));
    if (report.n_examples != doc.at("n_examples").get<std::size_t>() ||
        report.n_correct != doc.at("n_correct").get<std::size_t>()) {
      throw InputError("report counts disagree with its outcomes");
    }
    if (doc.contains("provenance")) {
      for (const auto& [key, value] : doc.at("provenance").items()) {
        report.provenance[key] = value.get<std::string>();
      }
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed report: {}", e.what()));
  }
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  out << report_to_json(report);
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot read report '{}'", path.string()));
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return report_from_json(text.str());
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_outcomes_tsv(std::ostream& out, const EvalReport& report) {
  out << "triple_id\tn_plus\tn_minus\tcorrect\tratio\n";
  for (const TripleOutcome& o : report.outcomes) {
    out << fmt::format("{}\t{:.6f}\t{:.6f}\t{}\t{}\n", o.triple_id, o.n_plus,
                       o.n_minus, o.correct ? "true" : "false",
                       std::isinf(o.ratio) ? std::string("inf")
                                           : fmt::format("{:.6f}", o.ratio));
  }
}

void write_histogram_tsv(std::ostream& out, const Histogram& histogram) {
  out << "bin_lo\tbin_hi\tcount\n";
  for (std::size_t i = 0; i < histogram.counts.size(); ++i) {
    out << fmt::format("{:.4f}\t{:.4f}\t{}\n", histogram.bin_edges[i],
                       histogram.bin_edges[i + 1], histogram.counts[i]);
  }
}

}  // namespace factrank
