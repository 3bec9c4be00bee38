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

#include "factrank/finetune.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include <gtest/gtest.h>

#include "factrank/rng.h"
#include "synthetic.h"

namespace factrank {
namespace {

namespace fs = std::filesystem;

class FinetuneTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = testing::scratch_dir(std::string("finetune-") + info->name());
    write_corpus("train.tsv", testing::synthetic_nli(300, 1, "tr"));
    write_corpus("dev.tsv", testing::synthetic_nli(60, 2, "dv"));
  }

  void write_corpus(const std::string& file, const std::vector<NliExample>& examples) {
    testing::write_mnli_tsv(dir_ / file, examples);
  }

  CorpusDescriptor corpus(const std::string& file, Split split = Split::kTrain) const {
    return CorpusDescriptor::make(fs::path(file).stem().string(), dir_ / file,
                                  CorpusFormat::kMnliTsv, split);
  }

  TrainConfig config(std::vector<std::string> stage_files, int epochs = 1) const {
    TrainConfig c;
    c.base_model_ref = "tiny:layers=1,hidden=16,heads=2,ffn=32,vocab=1024";
    c.learning_rate = 3e-3;
    c.epochs_per_stage = epochs;
    c.batch_size = 16;
    c.max_len = 48;
    c.seed = 11;
    for (std::size_t i = 0; i < stage_files.size(); ++i) {
      c.stages.push_back({"s" + std::to_string(i + 1), {corpus(stage_files[i])}});
    }
    c.eval_corpus = corpus("dev.tsv", Split::kDev);
    return c;
  }

  fs::path dir_;
};

TEST_F(FinetuneTest, OneEpochReportShape) {
  CheckpointStore store(dir_ / "store");
  std::vector<std::string> lines;
  const TrainConfig c = config({"train.tsv"});
  const StageOutcome out = train_stage(c, 0, c.base_model_ref, store,
                                       [&](std::string_view l) { lines.emplace_back(l); });
  ASSERT_TRUE(out.checkpoint.has_value());
  EXPECT_FALSE(out.report.failed);
  EXPECT_EQ(out.report.epoch_mean_loss.size(), 1u);
  ASSERT_EQ(out.report.dev_accuracy_per_epoch.size(), 1u);
  const double acc = out.report.dev_accuracy_per_epoch[0];
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
  // ceil(300 / 16) optimizer steps, numbered from 1.
  ASSERT_EQ(out.report.loss_curve.size(), 19u);
  EXPECT_EQ(out.report.loss_curve.front().first, 1u);
  EXPECT_EQ(out.report.loss_curve.back().first, 19u);
  EXPECT_FALSE(out.checkpoint->parent_id.has_value());
  EXPECT_EQ(out.checkpoint->stage_name, "s1");
  EXPECT_TRUE(store.contains(out.checkpoint->id));
  ASSERT_EQ(lines.size(), 1u);
  EXPECT_NE(lines[0].find("stage s1 epoch 1: mean loss"), std::string::npos);
}

TEST_F(FinetuneTest, EmptyCorpusIsRejectedBeforeTraining) {
  write_corpus("empty.tsv", {});
  CheckpointStore store(dir_ / "store");
  const TrainConfig c = config({"empty.tsv"});
  EXPECT_THROW(train_stage(c, 0, c.base_model_ref, store), InputError);
  EXPECT_TRUE(store.list().empty());
}

TEST_F(FinetuneTest, UnresolvableBaseModelIsInputError) {
  CheckpointStore store(dir_ / "store");
  TrainConfig c = config({"train.tsv"});
  c.base_model_ref = "roberta-base";
  EXPECT_THROW(train_stage(c, 0, c.base_model_ref, store), InputError);
}

TEST_F(FinetuneTest, LossDecreasesOverEpochs) {
  CheckpointStore store(dir_ / "store");
  const TrainConfig c = config({"train.tsv"}, 3);
  const StageOutcome out = train_stage(c, 0, c.base_model_ref, store);
  ASSERT_EQ(out.report.epoch_mean_loss.size(), 3u);
  EXPECT_LT(out.report.epoch_mean_loss.back(), out.report.epoch_mean_loss.front());
}

TEST_F(FinetuneTest, TwoStagesChainAndRecordLineage) {
  write_corpus("second.tsv", testing::synthetic_nli(90, 3, "se"));
  CheckpointStore store(dir_ / "store");
  const PipelineResult result = run_pipeline(config({"train.tsv", "second.tsv"}), store);
  ASSERT_FALSE(result.failed) << result.failure;
  ASSERT_EQ(result.checkpoints.size(), 2u);
  const Checkpoint& first = result.checkpoints[0];
  const Checkpoint& second = result.checkpoints[1];
  EXPECT_FALSE(first.parent_id.has_value());
  ASSERT_TRUE(second.parent_id.has_value());
  EXPECT_EQ(*second.parent_id, first.id);

  const auto chain = store.lineage(second.id);
  ASSERT_EQ(chain.size(), 2u);
  EXPECT_EQ(chain[0].id, first.id);
  EXPECT_EQ(chain[1].id, second.id);

  const Checkpoint loaded = store.load(second.id);
  EXPECT_EQ(loaded.stage_name, "s2");
  EXPECT_EQ(loaded.metrics.epoch_mean_loss, second.metrics.epoch_mean_loss);
  EXPECT_EQ(loaded.config_snapshot.to_json(), second.config_snapshot.to_json());
  EXPECT_EQ(store.list().size(), 2u);
}

TEST_F(FinetuneTest, DivergenceMarksStageFailed) {
  CheckpointStore store(dir_ / "store");
  TrainConfig c = config({"train.tsv"});
  c.learning_rate = 1e150;
  const StageOutcome out = train_stage(c, 0, c.base_model_ref, store);
  EXPECT_TRUE(out.report.failed);
  EXPECT_FALSE(out.checkpoint.has_value());
  EXPECT_NE(out.report.failure.find("non-finite"), std::string::npos);
  EXPECT_TRUE(store.list().empty());

  const PipelineResult result = run_pipeline(c, store);
  EXPECT_TRUE(result.failed);
  EXPECT_FALSE(result.failure_is_input_error);
  ASSERT_TRUE(result.failed_report.has_value());
  EXPECT_TRUE(result.failed_report->failed);
}

TEST_F(FinetuneTest, MissingSecondStageCorpusKeepsFirstCheckpoint) {
  CheckpointStore store(dir_ / "store");
  const PipelineResult result = run_pipeline(config({"train.tsv", "absent.tsv"}), store);
  EXPECT_TRUE(result.failed);
  EXPECT_TRUE(result.failure_is_input_error);
  EXPECT_EQ(result.failed_stage, 1u);
  ASSERT_EQ(result.checkpoints.size(), 1u);
  EXPECT_TRUE(store.contains(result.checkpoints[0].id));
  EXPECT_NO_THROW(load_checkpoint(result.checkpoints[0].dir));
}

TEST_F(FinetuneTest, TrainingIsDeterministic) {
  CheckpointStore a(dir_ / "a"), b(dir_ / "b");
  const TrainConfig c = config({"train.tsv"});
  const StageOutcome x = train_stage(c, 0, c.base_model_ref, a);
  const StageOutcome y = train_stage(c, 0, c.base_model_ref, b);
  EXPECT_EQ(x.report.loss_curve, y.report.loss_curve);
  EXPECT_EQ(x.checkpoint->id, y.checkpoint->id);
  std::ifstream wa(x.checkpoint->dir / "weights.bin", std::ios::binary);
  std::ifstream wb(y.checkpoint->dir / "weights.bin", std::ios::binary);
  EXPECT_TRUE(std::equal(std::istreambuf_iterator<char>(wa), {},
                         std::istreambuf_iterator<char>(wb), {}));
}

TEST_F(FinetuneTest, CheckpointEvalMatchesTrainingDevAccuracy) {
  CheckpointStore store(dir_ / "store");
  const TrainConfig c = config({"train.tsv"});
  const StageOutcome out = train_stage(c, 0, c.base_model_ref, store);
  EXPECT_EQ(eval_nli(*out.checkpoint, c.eval_corpus), out.report.dev_accuracy_per_epoch[0]);
}

TEST_F(FinetuneTest, ConfigJsonRoundTrip) {
  TrainConfig c = config({"train.tsv", "train.tsv"});
  c.stages[1].name = "later";
  c.stages[1].union_with_previous = true;
  c.max_examples_per_stage = 100;
  const TrainConfig back = TrainConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
  EXPECT_EQ(back.to_json(), c.to_json());

  {
    std::ofstream(dir_ / "config.json") << R"({
      "stages": [{"name": "mnli", "corpora": [{"path": "train.tsv", "format": "mnli-tsv"}]}],
      "eval_corpus": {"path": "dev.tsv", "format": "mnli-tsv", "split": "dev"}})";
  }
  const TrainConfig relative = TrainConfig::read(dir_ / "config.json");
  EXPECT_EQ(relative.stages[0].corpora[0].path, dir_ / "train.tsv");
  EXPECT_EQ(relative.learning_rate, 2e-5);
}

TEST(TrainConfigValidation, RejectsBadConfigs) {
  TrainConfig c;
  EXPECT_THROW(c.validate(), InputError);  // no stages
  const auto d = CorpusDescriptor::make("x", "x.tsv", CorpusFormat::kMnliTsv);
  c.stages = {{"a", {d}}, {"a", {d}}};
  c.eval_corpus = d;
  EXPECT_THROW(c.validate(), InputError);
  c.stages = {{"a/b", {d}}};
  EXPECT_THROW(c.validate(), InputError);
  c.stages = {{"a", {}}};
  EXPECT_THROW(c.validate(), InputError);
  c.stages = {{"a", {d}}};
  EXPECT_NO_THROW(c.validate());
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), InputError);
}

// Scores each example's own pair with a fixed distribution.
LookupScorer scorer_over(std::span<const NliExample> examples,
                         const std::vector<EntailmentScore>& scores) {
  LookupTable table;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    table.insert(examples[i].premise(), examples[i].hypothesis(), scores[i]);
  }
  return LookupScorer(std::move(table), true);
}

std::vector<NliExample> distinct_examples(std::size_t n) {
  std::vector<NliExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string k = std::to_string(i);
    out.emplace_back("u" + k, "premise " + k, "hypothesis " + k, kAllLabels[i % 3]);
  }
  return out;
}

TEST(EvalNli, PerfectAndUniformScorers) {
  const auto examples = distinct_examples(30);
  std::vector<EntailmentScore> gold;
  for (const auto& e : examples) gold.push_back(EntailmentScore::one_hot(e.label()));
  EXPECT_EQ(eval_nli(scorer_over(examples, gold), examples), 1.0);

  // Uniform argmax is entailment: exactly the entailment third is right.
  const LookupScorer uniform{LookupTable()};
  EXPECT_DOUBLE_EQ(eval_nli(uniform, examples), 1.0 / 3.0);
  EXPECT_THROW(eval_nli(uniform, std::span<const NliExample>()), InputError);
}

TEST(EvalNli, MatchesBruteForceCountAndIgnoresOrder) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto examples = distinct_examples(60);
    std::vector<EntailmentScore> scores;
    std::size_t hits = 0;
    for (const auto& e : examples) {
      // Coarse values so argmax ties occur.
      const double a = rng.below(3), b = rng.below(3), c = rng.below(3) + 1;
      const EntailmentScore s(a / (a + b + c), b / (a + b + c), c / (a + b + c));
      int best = 0;
      const double p[3] = {s.p_entail(), s.p_neutral(), s.p_contra()};
      for (int k = 1; k < 3; ++k) best = p[k] > p[best] ? k : best;
      hits += best == static_cast<int>(e.label()) ? 1 : 0;
      scores.push_back(s);
    }
    const LookupScorer scorer = scorer_over(examples, scores);
    const double acc = eval_nli(scorer, examples);
    ASSERT_EQ(acc, static_cast<double>(hits) / 60.0);
    rng.shuffle(std::span<NliExample>(examples));
    ASSERT_EQ(eval_nli(scorer, examples), acc);
  }
}

}  // namespace
}  // namespace factrank
