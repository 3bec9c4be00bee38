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

// factrank command line: corpus conversion, staged fine-tuning, triple
// evaluation, candidate ranking and the two analyses.
//
// Exit codes: 0 success, 1 bad input or usage, 2 scorer/training failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "factrank/attention.h"
#include "factrank/core.h"
#include "factrank/data.h"
#include "factrank/finetune.h"
#include "factrank/rank_eval.h"
#include "factrank/scorer.h"

namespace factrank {
namespace {

namespace fs = std::filesystem;

struct ScorerOptions {
  std::string backend = "lookup";
  std::string checkpoint;
  std::string table;
  bool strict_lookup = false;
  std::size_t max_len = ScorerConfig::kDefaultMaxLen;
  std::size_t batch_size = 16;

  void attach(CLI::App* cmd) {
    cmd->add_option("--scorer", backend, "lookup or model")
        ->check(CLI::IsMember({"lookup", "model"}));
    cmd->add_option("--checkpoint", checkpoint, "checkpoint directory (model)");
    cmd->add_option("--table", table, "lookup table JSONL (lookup)");
    cmd->add_flag("--strict-lookup", strict_lookup,
                  "fail on pairs missing from the table");
    cmd->add_option("--max-len", max_len);
    cmd->add_option("--batch-size", batch_size);
  }

  ScorerConfig config() const {
    ScorerConfig c;
    c.backend = parse_scorer_backend(backend);
    if (c.backend == ScorerBackend::kModel) {
      if (checkpoint.empty()) throw InputError("--scorer model needs --checkpoint");
      c.checkpoint_ref = checkpoint;
    } else {
      if (!checkpoint.empty()) throw InputError("--checkpoint needs --scorer model");
      c.checkpoint_ref = table;
    }
    c.max_len = max_len;
    c.batch_size = batch_size;
    c.strict_lookup = strict_lookup;
    c.validate();
    return c;
  }
};

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

// --- convert

struct ConvertOptions {
  std::string input;
  std::string output;
  std::string format;
  std::string name;
  std::string split = "train";
};

int run_convert(const ConvertOptions& o) {
  if (o.format == "triple-tsv" || o.format == "triple-jsonl") {
    const TripleDataset data = load_sc_triples(
        o.input, o.format == "triple-tsv" ? TripleFormat::kTsv : TripleFormat::kCanonicalJsonl);
    write_triples_jsonl(fs::path(o.output), data.triples);
    fmt::print("converted {} triples from {}\n", data.size(), o.input);
    return 0;
  }
  const fs::path in(o.input);
  const std::string name = o.name.empty() ? in.stem().string() : o.name;
  const CorpusDescriptor desc =
      CorpusDescriptor::make(name, in, parse_corpus_format(o.format), parse_split(o.split));
  const LoadedCorpus corpus = load_nli_corpus(desc);
  write_nli_jsonl(fs::path(o.output), corpus.examples);
  fmt::print("converted {} records from {} ({} dropped)\n", corpus.examples.size(),
             o.input, corpus.dropped);
  return 0;
}

// --- train

struct TrainOptions {
  std::string config;
  std::string store;
  std::optional<double> learning_rate;
  std::optional<int> epochs;
  std::optional<std::string> base_model;
  std::optional<std::size_t> max_examples;
  std::optional<std::uint64_t> seed;
};

int run_train(const TrainOptions& o) {
  TrainConfig config = TrainConfig::read(o.config);
  if (o.learning_rate) config.learning_rate = *o.learning_rate;
  if (o.epochs) config.epochs_per_stage = *o.epochs;
  if (o.base_model) config.base_model_ref = *o.base_model;
  if (o.max_examples) config.max_examples_per_stage = *o.max_examples;
  if (o.seed) config.seed = *o.seed;
  config.validate();

  CheckpointStore store(o.store);
  const PipelineResult result =
      run_pipeline(config, store, [](std::string_view line) { fmt::print("{}\n", line); });
  for (const Checkpoint& c : result.checkpoints) {
    fmt::print("checkpoint {} stage {} dev accuracy {:.2f}%\n", c.id, c.stage_name,
               100.0 * c.metrics.dev_accuracy_per_epoch.back());
  }
  std::fflush(stdout);
  if (!result.failed) return 0;
  const std::string& stage = config.stages[result.failed_stage].name;
  if (result.failure_is_input_error) {
    throw InputError(fmt::format("stage {}: {}", stage, result.failure));
  }
  throw ScorerError(fmt::format("stage {}: {}", stage, result.failure));
}

// --- evaluate

struct EvaluateOptions {
  ScorerOptions scorer;
  std::string data;
  std::string data_format = "canonical-jsonl";
  std::string report;
  std::string outcomes;
};

int run_evaluate(const EvaluateOptions& o) {
  const TripleDataset data = load_sc_triples(o.data, parse_triple_format(o.data_format));
  const ScorerConfig config = o.scorer.config();
  const std::unique_ptr<Scorer> scorer = make_scorer(config);
  EvalReport report = evaluate_sc(*scorer, data, std::string(scorer_backend_name(config.backend)));
  report.provenance["scorer"] = scorer->describe();
  report.provenance["max_len"] = std::to_string(config.max_len);
  report.provenance["strict_lookup"] = config.strict_lookup ? "true" : "false";
  if (!o.report.empty()) write_report(o.report, report);
  if (!o.outcomes.empty()) {
    std::ofstream out = open_output(o.outcomes);
    write_outcomes_tsv(out, report);
  }
  fmt::print("{}\n", accuracy_line(report));
  return 0;
}

// --- rank

struct RankOptions {
  ScorerOptions scorer;
  std::string doc;
  std::vector<std::string> candidates;
  std::string candidates_file;
};

int run_rank(const RankOptions& o) {
  std::vector<std::string> candidates = o.candidates;
  if (!o.candidates_file.empty()) {
    std::ifstream in(o.candidates_file);
    if (!in) throw InputError(fmt::format("cannot read '{}'", o.candidates_file));
    for (std::string line; std::getline(in, line);) {
      if (!trim(line).empty()) candidates.push_back(trim(line));
    }
  }
  if (candidates.empty()) throw InputError("no candidates given");
  const std::unique_ptr<Scorer> scorer = make_scorer(o.scorer.config());
  const RankResult result = rank_candidates(*scorer, o.doc, candidates);
  for (std::size_t r = 0; r < result.ordering.size(); ++r) {
    const std::size_t i = result.ordering[r];
    fmt::print("{}{}\t{}\t{:.6f}\t{}\n", i == result.chosen_index ? "*" : " ", r + 1, i,
               result.scores[i].p_entail(), candidates[i]);
  }
  return 0;
}

// --- analyze-ratios

struct RatioOptions {
  std::string report;
  std::size_t bins = 10;
  double threshold = 0.1;
  bool incorrect_only = true;
  std::string histogram;
  std::string failures;
};

int run_analyze_ratios(const RatioOptions& o) {
  const EvalReport report = read_report(o.report);
  const Histogram hist = ratio_histogram(report.outcomes, o.bins, o.incorrect_only);
  const std::vector<std::string> mined = mine_failures(report.outcomes, o.threshold);
  if (o.histogram.empty()) {
    write_histogram_tsv(std::cout, hist);
  } else {
    std::ofstream out = open_output(o.histogram);
    write_histogram_tsv(out, hist);
  }
  if (!o.failures.empty()) {
    std::ofstream out = open_output(o.failures);
    for (const std::string& id : mined) out << id << '\n';
  }
  fmt::print("{} outcomes histogrammed, {} below ratio {}\n", hist.total, mined.size(),
             o.threshold);
  return 0;
}

// --- analyze-attention

struct AttentionOptions {
  std::string dump;
  std::string checkpoint;
  std::string premise;
  std::string hypothesis;
  std::size_t max_len = ScorerConfig::kDefaultMaxLen;
  std::string heads;
  std::string layers;
  std::string export_dump;
  std::optional<std::size_t> query;
  std::size_t query_layer = 0;
};

int run_analyze_attention(const AttentionOptions& o) {
  std::optional<AttentionDump> dump;
  if (!o.dump.empty()) {
    if (!o.checkpoint.empty()) throw InputError("give either --dump or --checkpoint");
    dump = read_attention_dump(o.dump);
    if (!dump->segments) {
      throw InputError(fmt::format("'{}' has no segments", o.dump));
    }
  } else {
    if (o.checkpoint.empty() || o.premise.empty() || o.hypothesis.empty()) {
      throw InputError("need --dump, or --checkpoint with --premise and --hypothesis");
    }
    ScorerConfig config;
    config.backend = ScorerBackend::kModel;
    config.checkpoint_ref = o.checkpoint;
    config.max_len = o.max_len;
    config.emit_attentions = true;
    config.validate();
    const ModelScorer scorer = ModelScorer::from_config(config);
    const PairEncoding enc = scorer.encode(o.premise, o.hypothesis);
    dump.emplace(AttentionDump{scorer.attention(o.premise, o.hypothesis),
                               segment_tokens(enc), {}});
  }
  if (!o.export_dump.empty()) write_attention_dump(o.export_dump, *dump);

  const CrossMassProfile profile = cross_attention_mass(dump->tensor, *dump->segments);
  if (o.heads.empty()) {
    write_head_table(std::cout, profile);
  } else {
    std::ofstream out = open_output(o.heads);
    write_head_table(out, profile);
  }
  if (o.layers.empty()) {
    write_layer_table(std::cout, profile);
  } else {
    std::ofstream out = open_output(o.layers);
    write_layer_table(out, profile);
  }
  if (profile.n_layers >= 2) {
    const LayerTrend trend = layer_trend(profile);
    fmt::print("early layers {:.6f}, late layers {:.6f}\n", trend.early_mean,
               trend.late_mean);
  }
  if (o.query) {
    for (const KeyWeight& kw : token_attention_slice(dump->tensor, o.query_layer, *o.query)) {
      const std::string token =
          kw.key < dump->tokens.size() ? dump->tokens[kw.key] : std::string();
      fmt::print("{}\t{}\t{:.6f}\t{}\n", kw.key,
                 segment_class_name(dump->segments->classes[kw.key]), kw.weight, token);
    }
  }
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"factrank: entailment-based ranking of summaries"};
  app.require_subcommand(1);

  ConvertOptions convert;
  CLI::App* cmd_convert = app.add_subcommand("convert", "normalize a corpus to canonical JSONL");
  cmd_convert->add_option("--input", convert.input)->required();
  cmd_convert->add_option("--output", convert.output)->required();
  cmd_convert->add_option("--format", convert.format,
                          "anli-jsonl, mnli-tsv, canonical-jsonl, triple-tsv, triple-jsonl")
      ->required();
  cmd_convert->add_option("--name", convert.name, "source tag (default: file stem)");
  cmd_convert->add_option("--split", convert.split);

  TrainOptions train;
  CLI::App* cmd_train = app.add_subcommand("train", "run a staged fine-tuning config");
  cmd_train->add_option("--config", train.config)->required();
  cmd_train->add_option("--store", train.store, "checkpoint directory")->required();
  cmd_train->add_option("--learning-rate", train.learning_rate);
  cmd_train->add_option("--epochs", train.epochs);
  cmd_train->add_option("--base-model", train.base_model);
  cmd_train->add_option("--max-examples", train.max_examples);
  cmd_train->add_option("--seed", train.seed);

  EvaluateOptions evaluate;
  CLI::App* cmd_eval = app.add_subcommand("evaluate", "pairwise accuracy on triples");
  evaluate.scorer.attach(cmd_eval);
  cmd_eval->add_option("--data", evaluate.data)->required();
  cmd_eval->add_option("--data-format", evaluate.data_format, "canonical-jsonl or triple-tsv");
  cmd_eval->add_option("--report", evaluate.report, "JSON report path");
  cmd_eval->add_option("--outcomes", evaluate.outcomes, "per-triple TSV path");

  RankOptions rank;
  CLI::App* cmd_rank = app.add_subcommand("rank", "rank candidate summaries of a document");
  rank.scorer.attach(cmd_rank);
  cmd_rank->add_option("--doc", rank.doc)->required();
  cmd_rank->add_option("--candidate", rank.candidates);
  cmd_rank->add_option("--candidates-file", rank.candidates_file, "one candidate per line");

  RatioOptions ratios;
  CLI::App* cmd_ratios = app.add_subcommand("analyze-ratios", "probability-ratio histogram");
  cmd_ratios->add_option("--report", ratios.report)->required();
  cmd_ratios->add_option("--bins", ratios.bins);
  cmd_ratios->add_option("--threshold", ratios.threshold);
  cmd_ratios->add_option("--incorrect-only", ratios.incorrect_only);
  cmd_ratios->add_option("--histogram", ratios.histogram, "TSV output (default stdout)");
  cmd_ratios->add_option("--failures", ratios.failures, "mined triple ids");

  AttentionOptions attn;
  CLI::App* cmd_attn = app.add_subcommand("analyze-attention", "cross-segment attention mass");
  cmd_attn->add_option("--dump", attn.dump, "attention JSON export");
  cmd_attn->add_option("--checkpoint", attn.checkpoint);
  cmd_attn->add_option("--premise", attn.premise);
  cmd_attn->add_option("--hypothesis", attn.hypothesis);
  cmd_attn->add_option("--max-len", attn.max_len);
  cmd_attn->add_option("--heads", attn.heads, "per-head TSV (default stdout)");
  cmd_attn->add_option("--layers", attn.layers, "per-layer TSV (default stdout)");
  cmd_attn->add_option("--export", attn.export_dump, "write the attention dump");
  cmd_attn->add_option("--query", attn.query, "print the attention row of this position");
  cmd_attn->add_option("--query-layer", attn.query_layer);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[input]: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*cmd_convert) return run_convert(convert);
    if (*cmd_train) return run_train(train);
    if (*cmd_eval) return run_evaluate(evaluate);
    if (*cmd_rank) return run_rank(rank);
    if (*cmd_ratios) return run_analyze_ratios(ratios);
    if (*cmd_attn) return run_analyze_attention(attn);
  } catch (const InputError& e) {
    std::cerr << "error[input]: " << e.what() << '\n';
    return 1;
  } catch (const ScorerError& e) {
    std::cerr << "error[scorer]: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error[input]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[runtime]: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace
}  // namespace factrank

int main(int argc, char** argv) { return factrank::run(argc, argv); }
