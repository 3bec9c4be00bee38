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

// Staged fine-tuning: each stage trains on its corpora starting from the
// previous stage's checkpoint (the first stage starts from the base model),
// evaluates 3-way accuracy on a held-out corpus after every epoch, and
// writes a checkpoint with its lineage into a checkpoint store.
//
// Store layout, one directory per checkpoint:
//   <store>/<id>/checkpoint.json   id, parent_id, stage, config snapshot
//   <store>/<id>/report.json       TrainReport
//   <store>/<id>/model.json        encoder shape
//   <store>/<id>/weights.bin       encoder weights

#ifndef FACTRANK_FINETUNE_H_
#define FACTRANK_FINETUNE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "factrank/core.h"
#include "factrank/data.h"
#include "factrank/encoder.h"
#include "factrank/scorer.h"
#include "json.hpp"

namespace factrank {

struct StageSpec {
  std::string name;
  std::vector<CorpusDescriptor> corpora;
  // Also train on every earlier stage's corpora (the combined reading of
  // "MNLI + ANLI"). Off by default: the stage continues on its own corpora.
  bool union_with_previous = false;
};

struct TrainConfig {
  std::string base_model_ref = "tiny";
  std::vector<StageSpec> stages;
  double learning_rate = 2e-5;
  int epochs_per_stage = 2;
  std::size_t batch_size = 16;
  std::size_t max_len = ScorerConfig::kDefaultMaxLen;
  std::uint64_t seed = 0;
  CorpusDescriptor eval_corpus;
  std::size_t max_examples_per_stage = 0;  // 0 keeps every example

  // Throws InputError: no stages, non-positive counts or rate, duplicate or
  // unsafe stage names, unregistered corpus descriptors.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  // Relative corpus paths resolve against base_dir.
  static TrainConfig from_json(const nlohmann::json& doc,
                               const std::filesystem::path& base_dir = {});
  static TrainConfig read(const std::filesystem::path& path);
};

struct TrainReport {
  std::vector<std::pair<std::size_t, double>> loss_curve;  // (step, batch loss)
  std::vector<double> epoch_mean_loss;
  std::vector<double> dev_accuracy_per_epoch;
  bool failed = false;
  std::string failure;

  nlohmann::ordered_json to_json() const;
  static TrainReport from_json(const nlohmann::json& doc);
};

struct Checkpoint {
  std::string id;
  std::optional<std::string> parent_id;
  std::string stage_name;
  TrainConfig config_snapshot;
  TrainReport metrics;
  std::filesystem::path dir;
};

// A directory of checkpoints. One training run writes to a store at a time.
class CheckpointStore {
 public:
  explicit CheckpointStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  // Writes the encoder and metadata under a fresh id derived from the stage
  // and its parent.
  Checkpoint save(const TinyEncoder& encoder, std::size_t stage_index,
                  std::string stage_name, std::optional<std::string> parent_id,
                  const TrainConfig& config, const TrainReport& report);

  Checkpoint load(std::string_view id) const;
  bool contains(std::string_view id) const;
  // Every checkpoint in the store, by id.
  std::vector<Checkpoint> list() const;

  // Parent chain from the root ancestor down to id.
  std::vector<Checkpoint> lineage(std::string_view id) const;

 private:
  std::filesystem::path root_;
};

// Reads a checkpoint directory written by CheckpointStore.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Fraction of examples whose score argmax equals the gold label (argmax ties
// resolve entailment, neutral, contradiction). Throws InputError when empty.
double eval_nli(const Scorer& scorer, std::span<const NliExample> examples);
double eval_nli(const Checkpoint& checkpoint, const CorpusDescriptor& corpus);

using TrainLog = std::function<void(std::string_view)>;

struct StageOutcome {
  std::optional<Checkpoint> checkpoint;  // empty when training failed
  TrainReport report;
};

// The encoder a stage starts from: a base model reference or a checkpoint.
using StageInit = std::variant<std::string, Checkpoint>;

// Trains one stage. Unloadable or empty corpora and unresolvable init throw
// InputError before training starts. A non-finite loss or gradient aborts
// the stage and returns the partial report with failed set.
StageOutcome train_stage(const TrainConfig& config, std::size_t stage_index,
                         const StageInit& init, CheckpointStore& store,
                         const TrainLog& log = {});

struct PipelineResult {
  std::vector<Checkpoint> checkpoints;  // one per completed stage, in order
  bool failed = false;
  std::size_t failed_stage = 0;
  std::string failure;
  bool failure_is_input_error = false;
  std::optional<TrainReport> failed_report;
};

// Runs every stage in order, chaining each from the previous checkpoint.
// A failing stage stops the pipeline; completed checkpoints stay in the
// store and in the result.
PipelineResult run_pipeline(const TrainConfig& config, CheckpointStore& store,
                            const TrainLog& log = {});

}  // namespace factrank

#endif  // FACTRANK_FINETUNE_H_
