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

#include "factrank/core.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace factrank {

std::string_view label_name(NliLabel label) {
  switch (label) {
    case NliLabel::kEntailment:
      return "entailment";
    case NliLabel::kNeutral:
      return "neutral";
    case NliLabel::kContradiction:
      return "contradiction";
  }
  return "entailment";
}

LabelSchema parse_label_schema(std::string_view name) {
  if (name == "anli-letter") return LabelSchema::kAnliLetter;
  if (name == "mnli-word") return LabelSchema::kMnliWord;
  throw InputError(fmt::format("unknown label schema '{}'", name));
}

std::string_view label_schema_name(LabelSchema schema) {
  return schema == LabelSchema::kAnliLetter ? "anli-letter" : "mnli-word";
}

namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

NliLabel map_label(std::string_view raw, LabelSchema schema) {
  if (schema == LabelSchema::kAnliLetter) {
    if (raw == "e") return NliLabel::kEntailment;
    if (raw == "n") return NliLabel::kNeutral;
    if (raw == "c") return NliLabel::kContradiction;
  } else {
    const std::string lower = to_lower(raw);
    for (NliLabel label : kAllLabels) {
      if (lower == label_name(label)) return label;
    }
  }
  throw InputError(fmt::format("unmapped label '{}' for schema {}", raw,
                               label_schema_name(schema)));
}

NliLabel map_label(std::string_view raw, std::string_view schema) {
  return map_label(raw, parse_label_schema(schema));
}

EntailmentScore::EntailmentScore(double p_entail, double p_neutral,
                                 double p_contra)
    : probs_{p_entail, p_neutral, p_contra} {
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InputError(fmt::format(
          "score component {} outside [0,1] in ({}, {}, {})", p, p_entail,
          p_neutral, p_contra));
    }
  }
  const double sum = p_entail + p_neutral + p_contra;
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw InputError(fmt::format("score components sum to {}, not 1", sum));
  }
}

EntailmentScore EntailmentScore::uniform() {
  return EntailmentScore(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
}

EntailmentScore EntailmentScore::one_hot(NliLabel label) {
  std::array<double, 3> p{0.0, 0.0, 0.0};
  p[static_cast<int>(label)] = 1.0;
  return EntailmentScore(p[0], p[1], p[2]);
}

NliLabel EntailmentScore::argmax() const {
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (probs_[i] > probs_[best]) best = i;
  }
  return static_cast<NliLabel>(best);
}

double probability_ratio(double n_plus, double n_minus) {
  const auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(n_plus) || !in_unit(n_minus)) {
    throw InputError(fmt::format(
        "probability_ratio inputs must lie in [0,1], got ({}, {})", n_plus,
        n_minus));
  }
  if (n_minus == 0.0) {
    return n_plus == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  }
  return n_plus / n_minus;
}

std::string trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\v\f";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  return std::string(text.substr(first, last - first + 1));
}

NliExample::NliExample(std::string uid, std::string_view premise,
                       std::string_view hypothesis, NliLabel label,
                       std::string source_tag)
    : uid_(std::move(uid)),
      premise_(trim(premise)),
      hypothesis_(trim(hypothesis)),
      label_(label),
      source_tag_(std::move(source_tag)) {
  if (premise_.empty()) {
    throw InputError(fmt::format("example '{}' has an empty premise", uid_));
  }
  if (hypothesis_.empty()) {
    throw InputError(
        fmt::format("example '{}' has an empty hypothesis", uid_));
  }
}

SummaryTriple::SummaryTriple(std::string id, std::string_view source,
                             std::string_view correct,
                             std::string_view incorrect)
    : id_(std::move(id)),
      source_(trim(source)),
      correct_(trim(correct)),
      incorrect_(trim(incorrect)) {
  if (id_.empty()) throw InputError("triple with an empty id");
  if (source_.empty() || correct_.empty() || incorrect_.empty()) {
    throw InputError(fmt::format("triple '{}' has an empty field", id_));
  }
  if (correct_ == incorrect_) {
    throw InputError(fmt::format(
        "triple '{}' has identical correct and incorrect summaries", id_));
  }
}

}  // namespace factrank
