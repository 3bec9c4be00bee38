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

// Runs the factrank binary end to end and checks exit codes, stdout and
// the files it writes.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "factrank/attention.h"
#include "factrank/data.h"
#include "factrank/rank_eval.h"
#include "factrank/scorer.h"
#include "synthetic.h"

namespace factrank {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string quote(const std::string& arg) {
  std::string q = "'";
  for (char c : arg) q += c == '\'' ? std::string("'\\''") : std::string(1, c);
  return q + "'";
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = testing::scratch_dir(std::string("cli-") + info->name());
  }

  RunResult run(const std::vector<std::string>& args) const {
    std::string cmd = quote(FACTRANK_CLI_PATH);
    for (const auto& a : args) cmd += " " + quote(a);
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    cmd += " >" + quote(out.string()) + " 2>" + quote(err.string());
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out);
    r.err = read_file(err);
    return r;
  }

  // Triples plus a lookup table that favours the correct summary on all but
  // the last two triples.
  void write_eval_fixture() {
    const auto triples = testing::synthetic_triples(10, 4);
    write_triples_jsonl(dir_ / "sc.jsonl", triples);
    LookupTable table;
    for (std::size_t i = 0; i < triples.size(); ++i) {
      const bool good = i < 8;
      const double plus = good ? 0.8 : (i == 8 ? 0.05 : 0.01);
      const double minus = good ? 0.2 : 0.9;
      table.insert(triples[i].source(), triples[i].correct(),
                   EntailmentScore(plus, (1 - plus) / 2, (1 - plus) / 2));
      table.insert(triples[i].source(), triples[i].incorrect(),
                   EntailmentScore(minus, (1 - minus) / 2, (1 - minus) / 2));
    }
    table.write_jsonl(dir_ / "table.jsonl");
  }

  fs::path dir_;
};

bool single_line(const std::string& s) {
  return !s.empty() && s.find('\n') == s.size() - 1;
}

TEST_F(CliTest, UsageErrorsExitWithOne) {
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"no-such-command"}).code, 1);
  EXPECT_EQ(run({"evaluate"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST_F(CliTest, ConvertIsIdempotent) {
  testing::write_mnli_tsv(dir_ / "mnli.tsv", testing::synthetic_nli(30, 1), 4);
  const RunResult r = run({"convert", "--input", (dir_ / "mnli.tsv").string(), "--format",
                           "mnli-tsv", "--output", (dir_ / "a.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("converted 30 records"), std::string::npos);
  EXPECT_NE(r.out.find("(4 dropped)"), std::string::npos);

  ASSERT_EQ(run({"convert", "--input", (dir_ / "a.jsonl").string(), "--format",
                 "canonical-jsonl", "--output", (dir_ / "b.jsonl").string()})
                .code,
            0);
  EXPECT_EQ(read_file(dir_ / "a.jsonl"), read_file(dir_ / "b.jsonl"));
}

TEST_F(CliTest, ConvertReportsEveryBadLine) {
  {
    std::ofstream(dir_ / "bad.jsonl")
        << R"({"uid":"a","premise":"p","hypothesis":"h","label":"e"})" "\n"
        << "not json\n"
        << R"({"uid":"b","premise":"p","hypothesis":"h","label":"e"})" "\n"
        << R"({"uid":"c","premise":"","hypothesis":"h","label":"n"})" "\n";
  }
  const RunResult r = run({"convert", "--input", (dir_ / "bad.jsonl").string(), "--format",
                           "anli-jsonl", "--output", (dir_ / "out.jsonl").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_TRUE(single_line(r.err)) << r.err;
  EXPECT_NE(r.err.find("2"), std::string::npos);
  EXPECT_NE(r.err.find("4"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir_ / "out.jsonl"));
}

TEST_F(CliTest, EvaluateLookupWritesReportAndAnalyzesRatios) {
  write_eval_fixture();
  const fs::path report = dir_ / "report.json";
  const RunResult r = run({"evaluate", "--data", (dir_ / "sc.jsonl").string(), "--scorer",
                           "lookup", "--table", (dir_ / "table.jsonl").string(),
                           "--report", report.string(), "--outcomes",
                           (dir_ / "outcomes.tsv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "accuracy = 80.00% (8/10)\n");
  const EvalReport parsed = read_report(report);
  EXPECT_EQ(parsed.n_correct, 8u);

  const std::string first = read_file(report);
  ASSERT_EQ(run({"evaluate", "--data", (dir_ / "sc.jsonl").string(), "--table",
                 (dir_ / "table.jsonl").string(), "--report", report.string()})
                .code,
            0);
  EXPECT_EQ(read_file(report), first);

  const RunResult a = run({"analyze-ratios", "--report", report.string(), "--failures",
                           (dir_ / "mined.txt").string()});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("bin_lo\tbin_hi\tcount\n0.0000\t0.1000\t2\n"), std::string::npos);
  EXPECT_NE(a.out.find("2 outcomes histogrammed, 2 below ratio 0.1"), std::string::npos);
  EXPECT_EQ(read_file(dir_ / "mined.txt"), "t0009\nt0008\n");
}

TEST_F(CliTest, StrictLookupMissAbortsWithoutReport) {
  write_eval_fixture();
  {
    std::ofstream(dir_ / "partial.jsonl")
        << read_file(dir_ / "table.jsonl").substr(0, read_file(dir_ / "table.jsonl").find('\n') + 1);
  }
  const RunResult r = run({"evaluate", "--data", (dir_ / "sc.jsonl").string(),
                           "--table", (dir_ / "partial.jsonl").string(), "--strict-lookup",
                           "--report", (dir_ / "report.json").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_TRUE(single_line(r.err)) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "report.json"));
}

TEST_F(CliTest, EvaluateErrorsMapToExitCodes) {
  write_eval_fixture();
  const RunResult missing = run({"evaluate", "--data", (dir_ / "absent.jsonl").string()});
  EXPECT_EQ(missing.code, 1);
  EXPECT_TRUE(single_line(missing.err));
  const RunResult bad_ckpt = run({"evaluate", "--data", (dir_ / "sc.jsonl").string(),
                                  "--scorer", "model", "--checkpoint",
                                  (dir_ / "nothing").string()});
  EXPECT_EQ(bad_ckpt.code, 2);
  EXPECT_TRUE(single_line(bad_ckpt.err));
  EXPECT_EQ(run({"evaluate", "--data", (dir_ / "sc.jsonl").string(), "--max-len", "4"}).code,
            1);
}

TEST_F(CliTest, RankMarksChosenCandidate) {
  LookupTable table;
  table.insert("the doc", "first", EntailmentScore(0.2, 0.4, 0.4));
  table.insert("the doc", "second", EntailmentScore(0.8, 0.1, 0.1));
  table.insert("the doc", "third", EntailmentScore(0.5, 0.5, 0.0));
  table.write_jsonl(dir_ / "t.jsonl");
  const RunResult r = run({"rank", "--doc", "the doc", "--candidate", "first", "--candidate",
                           "second", "--candidate", "third", "--table",
                           (dir_ / "t.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out,
            "*1\t1\t0.800000\tsecond\n"
            " 2\t2\t0.500000\tthird\n"
            " 3\t0\t0.200000\tfirst\n");
  EXPECT_EQ(run({"rank", "--doc", "d"}).code, 1);
}

TEST_F(CliTest, AnalyzeAttentionFromDump) {
  SegmentMap map;
  map.classes = {SegmentClass::kSpecial, SegmentClass::kPremise, SegmentClass::kPremise,
                 SegmentClass::kSpecial, SegmentClass::kHypothesis, SegmentClass::kSpecial};
  write_attention_dump(dir_ / "attn.json",
                       AttentionDump{AttentionTensor::uniform(2, 1, 6), map, {}});
  const RunResult r = run({"analyze-attention", "--dump", (dir_ / "attn.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  // 2 * 2 * 1 / 3^2
  EXPECT_NE(r.out.find("0\t0\t0.444444\n1\t0\t0.444444\n"), std::string::npos);
  EXPECT_NE(r.out.find("layer\tper_layer_mean\n0\t0.444444\n"), std::string::npos);
  EXPECT_EQ(run({"analyze-attention"}).code, 1);
}

TEST_F(CliTest, TrainThenScoreWithModel) {
  testing::write_mnli_tsv(dir_ / "train.tsv", testing::synthetic_nli(120, 1, "tr"), 2);
  testing::write_mnli_tsv(dir_ / "dev.tsv", testing::synthetic_nli(30, 2, "dv"));
  {
    std::ofstream(dir_ / "config.json") << R"({
      "base_model_ref": "tiny:layers=2,hidden=16,heads=2,ffn=32,vocab=1024",
      "learning_rate": 0.003, "epochs_per_stage": 1, "batch_size": 16,
      "max_len": 48, "seed": 3,
      "stages": [{"name": "mnli", "corpora": [{"path": "train.tsv", "format": "mnli-tsv"}]}],
      "eval_corpus": {"path": "dev.tsv", "format": "mnli-tsv", "split": "dev"}})";
  }
  const fs::path store = dir_ / "store";
  const RunResult t = run({"train", "--config", (dir_ / "config.json").string(), "--store",
                           store.string()});
  ASSERT_EQ(t.code, 0) << t.err;
  EXPECT_NE(t.out.find("stage mnli epoch 1"), std::string::npos);
  ASSERT_EQ(std::distance(fs::directory_iterator(store), fs::directory_iterator()), 1);
  const fs::path ckpt = fs::directory_iterator(store)->path();

  write_triples_jsonl(dir_ / "sc.jsonl", testing::synthetic_triples(5, 1));
  const RunResult e = run({"evaluate", "--data", (dir_ / "sc.jsonl").string(), "--scorer",
                           "model", "--checkpoint", ckpt.string(), "--max-len", "48"});
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_EQ(e.out.rfind("accuracy = ", 0), 0u);

  const RunResult a = run({"analyze-attention", "--checkpoint", ckpt.string(), "--premise",
                           "a cat sat on the mat", "--hypothesis", "a cat sat", "--max-len",
                           "48", "--query", "1"});
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_NE(a.out.find("early layers"), std::string::npos);

  const RunResult diverged =
      run({"train", "--config", (dir_ / "config.json").string(), "--store",
           (dir_ / "store2").string(), "--learning-rate", "1e150"});
  EXPECT_EQ(diverged.code, 2);
  EXPECT_TRUE(single_line(diverged.err)) << diverged.err;
}

}  // namespace
}  // namespace factrank
