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

// Deterministic synthetic corpora for tests: templated NLI pairs with
// learnable label cues, and summary-correctness triples.

#ifndef FACTRANK_TESTS_SUPPORT_SYNTHETIC_H_
#define FACTRANK_TESTS_SUPPORT_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factrank/core.h"
#include "factrank/data.h"

namespace factrank::testing {

// n templated examples. Labels cycle entailment, neutral, contradiction, so
// any multiple of 3 is exactly balanced.
std::vector<NliExample> synthetic_nli(std::size_t n, std::uint64_t seed,
                                      std::string_view uid_prefix = "syn");

// MultiNLI-style TSV: header with pairID, sentence1, sentence2, gold_label.
// dash_rows extra rows with gold_label "-" are appended.
void write_mnli_tsv(const std::filesystem::path& path,
                    std::span<const NliExample> examples,
                    std::size_t dash_rows = 0);

// n triples where the correct summary copies part of the source and the
// incorrect one swaps in a foreign entity.
std::vector<SummaryTriple> synthetic_triples(std::size_t n, std::uint64_t seed);

// A fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(std::string_view name);

}  // namespace factrank::testing

#endif  // FACTRANK_TESTS_SUPPORT_SYNTHETIC_H_
