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

// Domain types shared by every factrank module: NLI labels, the 3-way
// entailment distribution, NLI records and summary-correctness triples.

#ifndef FACTRANK_CORE_H_
#define FACTRANK_CORE_H_

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace factrank {

// Bad input: malformed files, invalid values, violated preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failure while producing scores or training (unloadable checkpoint,
// missing lookup entry in strict mode, diverged training).
class ScorerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class NliLabel { kEntailment = 0, kNeutral = 1, kContradiction = 2 };

inline constexpr std::array<NliLabel, 3> kAllLabels = {
    NliLabel::kEntailment, NliLabel::kNeutral, NliLabel::kContradiction};

// "entailment", "neutral" or "contradiction".
std::string_view label_name(NliLabel label);

enum class LabelSchema { kAnliLetter, kMnliWord };

// Accepts the registered schema names "anli-letter" and "mnli-word".
LabelSchema parse_label_schema(std::string_view name);
std::string_view label_schema_name(LabelSchema schema);

// Maps a raw corpus label onto NliLabel. Throws InputError naming the
// offending value when it is not part of the schema.
NliLabel map_label(std::string_view raw, LabelSchema schema);
NliLabel map_label(std::string_view raw, std::string_view schema);

// A 3-way probability distribution over NLI labels. Construction enforces
// that every component lies in [0,1] and that they sum to 1 within 1e-6.
class EntailmentScore {
 public:
  static constexpr double kSumTolerance = 1e-6;

  EntailmentScore(double p_entail, double p_neutral, double p_contra);

  static EntailmentScore uniform();
  static EntailmentScore one_hot(NliLabel label);

  double p_entail() const { return probs_[0]; }
  double p_neutral() const { return probs_[1]; }
  double p_contra() const { return probs_[2]; }
  double prob(NliLabel label) const {
    return probs_[static_cast<int>(label)];
  }

  // Highest-probability label; ties resolve toward entailment, then
  // neutral, then contradiction.
  NliLabel argmax() const;

  bool operator==(const EntailmentScore&) const = default;

 private:
  std::array<double, 3> probs_;
};

// N(d, s): the entailment component of the distribution.
inline double entailment_prob(const EntailmentScore& score) {
  return score.p_entail();
}

// N(d,s+) / N(d,s-). Both zero yields 1.0; a zero denominator with a positive
// numerator yields +infinity. Inputs outside [0,1] throw InputError.
double probability_ratio(double n_plus, double n_minus);

// Strips surrounding ASCII whitespace. Interior text is never touched.
std::string trim(std::string_view text);

class NliExample {
 public:
  // Trims premise and hypothesis; throws InputError when either is empty.
  NliExample(std::string uid, std::string_view premise,
             std::string_view hypothesis, NliLabel label,
             std::string source_tag = {});

  const std::string& uid() const { return uid_; }
  const std::string& premise() const { return premise_; }
  const std::string& hypothesis() const { return hypothesis_; }
  NliLabel label() const { return label_; }
  const std::string& source_tag() const { return source_tag_; }

  bool operator==(const NliExample&) const = default;

 private:
  std::string uid_;
  std::string premise_;
  std::string hypothesis_;
  NliLabel label_;
  std::string source_tag_;
};

// A (premise, hypothesis) pair as handed to a scorer.
struct TextPair {
  std::string premise;
  std::string hypothesis;

  bool operator==(const TextPair&) const = default;
};

// One source sentence d with a correct summary s+ and an incorrect one s-.
class SummaryTriple {
 public:
  // Trims all texts; throws InputError when one is empty or when the two
  // summaries are identical.
  SummaryTriple(std::string id, std::string_view source,
                std::string_view correct, std::string_view incorrect);

  const std::string& id() const { return id_; }
  const std::string& source() const { return source_; }
  const std::string& correct() const { return correct_; }
  const std::string& incorrect() const { return incorrect_; }

  bool operator==(const SummaryTriple&) const = default;

 private:
  std::string id_;
  std::string source_;
  std::string correct_;
  std::string incorrect_;
};

}  // namespace factrank

#endif  // FACTRANK_CORE_H_
