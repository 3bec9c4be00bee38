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

#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "factrank/encoding.h"
#include "factrank/rng.h"

namespace factrank {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

bool is_safe_name(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    if (!ok) return false;
  }
  return name != "." && name != "..";
}

ordered_json descriptor_to_json(const CorpusDescriptor& d) {
  ordered_json doc;
  doc["name"] = d.name;
  doc["path"] = d.path.string();
  doc["format"] = corpus_format_name(d.format);
  doc["label_schema"] = label_schema_name(d.label_schema);
  doc["split"] = split_name(d.split);
  return doc;
}

CorpusDescriptor descriptor_from_json(const json& doc,
                                      const std::filesystem::path& base_dir) {
  std::filesystem::path path = doc.at("path").get<std::string>();
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  const CorpusFormat format = parse_corpus_format(doc.at("format").get<std::string>());
  CorpusDescriptor d = CorpusDescriptor::make(
      doc.value("name", path.stem().string()), path, format,
      parse_split(doc.value("split", std::string("train"))));
  if (doc.contains("label_schema")) {
    d.label_schema = parse_label_schema(doc.at("label_schema").get<std::string>());
  }
  d.validate();
  return d;
}

std::vector<NliExample> load_examples(const CorpusDescriptor& descriptor) {
  return load_nli_corpus(descriptor).examples;
}

}  // namespace

void TrainConfig::validate() const {
  if (stages.empty()) throw InputError("training config has no stages");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw InputError("learning_rate must be positive");
  }
  if (epochs_per_stage < 1) throw InputError("epochs_per_stage must be at least 1");
  if (batch_size < 1) throw InputError("batch_size must be at least 1");
  if (max_len < 8) throw InputError("max_len must be at least 8");
  std::set<std::string> names;
  for (const StageSpec& stage : stages) {
    if (!is_safe_name(stage.name)) {
      throw InputError(fmt::format("stage name '{}' must match [A-Za-z0-9._-]+",
                                   stage.name));
    }
    if (!names.insert(stage.name).second) {
      throw InputError(fmt::format("duplicate stage name '{}'", stage.name));
    }
    if (stage.corpora.empty()) {
      throw InputError(fmt::format("stage '{}' lists no corpora", stage.name));
    }
    for (const CorpusDescriptor& d : stage.corpora) d.validate();
  }
  eval_corpus.validate();
}

ordered_json TrainConfig::to_json() const {
  ordered_json doc;
  doc["base_model_ref"] = base_model_ref;
  doc["learning_rate"] = learning_rate;
  doc["epochs_per_stage"] = epochs_per_stage;
  doc["batch_size"] = batch_size;
  doc["max_len"] = max_len;
  doc["seed"] = seed;
  doc["max_examples_per_stage"] = max_examples_per_stage;
  ordered_json stage_list = ordered_json::array();
  for (const StageSpec& stage : stages) {
    ordered_json s;
    s["name"] = stage.name;
    s["union_with_previous"] = stage.union_with_previous;
    s["corpora"] = ordered_json::array();
    for (const CorpusDescriptor& d : stage.corpora) {
      s["corpora"].push_back(descriptor_to_json(d));
    }
    stage_list.push_back(std::move(s));
  }
  doc["stages"] = std::move(stage_list);
  doc["eval_corpus"] = descriptor_to_json(eval_corpus);
  return doc;
}

TrainConfig TrainConfig::from_json(const json& doc,
                                   const std::filesystem::path& base_dir) {
  TrainConfig config;
  try {
    config.base_model_ref = doc.value("base_model_ref", config.base_model_ref);
    config.learning_rate = doc.value("learning_rate", config.learning_rate);
    config.epochs_per_stage = doc.value("epochs_per_stage", config.epochs_per_stage);
    config.batch_size = doc.value("batch_size", config.batch_size);
    config.max_len = doc.value("max_len", config.max_len);
    config.seed = doc.value("seed", config.seed);
    config.max_examples_per_stage =
        doc.value("max_examples_per_stage", config.max_examples_per_stage);
    for (const auto& s : doc.at("stages")) {
      StageSpec stage;
      stage.name = s.at("name").get<std::string>();
      stage.union_with_previous = s.value("union_with_previous", false);
      for (const auto& d : s.at("corpora")) {
        stage.corpora.push_back(descriptor_from_json(d, base_dir));
      }
      config.stages.push_back(std::move(stage));
    }
    config.eval_corpus = descriptor_from_json(doc.at("eval_corpus"), base_dir);
  } catch (const json::exception& e) {
    throw InputError(fmt::format("malformed training config: {}", e.what()));
  }
  config.validate();
  return config;
}

TrainConfig TrainConfig::read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot read config '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return from_json(doc, path.parent_path());
}

ordered_json TrainReport::to_json() const {
  ordered_json doc;
  ordered_json curve = ordered_json::array();
  for (const auto& [step, loss] : loss_curve) curve.push_back({step, loss});
  doc["loss_curve"] = std::move(curve);
  doc["epoch_mean_loss"] = epoch_mean_loss;
  doc["dev_accuracy_per_epoch"] = dev_accuracy_per_epoch;
  doc["failed"] = failed;
  doc["failure"] = failure;
  return doc;
}

TrainReport TrainReport::from_json(const json& doc) {
  TrainReport report;
  for (const auto& point : doc.at("loss_curve")) {
    report.loss_curve.emplace_back(point.at(0).get<std::size_t>(),
                                   point.at(1).get<double>());
  }
  report.epoch_mean_loss = doc.at("epoch_mean_loss").get<std::vector<double>>();
  report.dev_accuracy_per_epoch =
      doc.at("dev_accuracy_per_epoch").get<std::vector<double>>();
  report.failed = doc.value("failed", false);
  report.failure = doc.value("failure", std::string());
  return report;
}

CheckpointStore::CheckpointStore(std::filesystem::path root)
    : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec || !std::filesystem::is_directory(root_)) {
    throw InputError(
        fmt::format("cannot use '{}' as a checkpoint store", root_.string()));
  }
}

Checkpoint CheckpointStore::save(const TinyEncoder& encoder,
                                 std::size_t stage_index, std::string stage_name,
                                 std::optional<std::string> parent_id,
                                 const TrainConfig& config,
                                 const TrainReport& report) {
  // Ids read "<stage index>-<stage>-<hash>", where the hash covers parent
  // and config; a suffix keeps them unique when a store is reused.
  const std::string fingerprint = fmt::format(
      "{}|{}|{}", parent_id.value_or(""), stage_name, config.to_json().dump());
  std::uint32_t hash = 2166136261u;
  for (char c : fingerprint) {
    hash ^= static_cast<unsigned char>(c);
    hash *= 16777619u;
  }
  const std::string base = fmt::format("{:02d}-{}-{:08x}", stage_index, stage_name, hash);
  std::string id = base;
  for (int suffix = 2; std::filesystem::exists(root_ / id); ++suffix) {
    id = fmt::format("{}-{}", base, suffix);
  }

  const std::filesystem::path dir = root_ / id;
  encoder.save(dir);
  ordered_json meta;
  meta["id"] = id;
  meta["parent_id"] = parent_id ? ordered_json(*parent_id) : ordered_json(nullptr);
  meta["stage_name"] = stage_name;
  meta["stage_index"] = stage_index;
  meta["config"] = config.to_json();
  {
    std::ofstream out(dir / "checkpoint.json", std::ios::trunc);
    out << meta.dump(2) << '\n';
  }
  {
    std::ofstream out(dir / "report.json", std::ios::trunc);
    out << report.to_json().dump(2) << '\n';
    if (!out) throw ScorerError(fmt::format("cannot write checkpoint '{}'", dir.string()));
  }
  return Checkpoint{id, std::move(parent_id), std::move(stage_name), config, report, dir};
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream meta_in(dir / "checkpoint.json");
  std::ifstream report_in(dir / "report.json");
  if (!meta_in || !report_in) {
    throw ScorerError(fmt::format("'{}' is not a checkpoint directory", dir.string()));
  }
  try {
    const json meta = json::parse(meta_in);
    Checkpoint ckpt;
    ckpt.id = meta.at("id").get<std::string>();
    if (!meta.at("parent_id").is_null()) {
      ckpt.parent_id = meta.at("parent_id").get<std::string>();
    }
    ckpt.stage_name = meta.at("stage_name").get<std::string>();
    ckpt.config_snapshot = TrainConfig::from_json(meta.at("config"));
    ckpt.metrics = TrainReport::from_json(json::parse(report_in));
    ckpt.dir = dir;
    return ckpt;
  } catch (const json::exception& e) {
    throw ScorerError(
        fmt::format("malformed checkpoint '{}': {}", dir.string(), e.what()));
  }
}

Checkpoint CheckpointStore::load(std::string_view id) const {
  return load_checkpoint(root_ / std::string(id));
}

bool CheckpointStore::contains(std::string_view id) const {
  return std::filesystem::exists(root_ / std::string(id) / "checkpoint.json");
}

std::vector<Checkpoint> CheckpointStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : std::filesystem::directory_iterator(root_)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "checkpoint.json")) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  std::vector<Checkpoint> out;
  for (const std::string& id : ids) out.push_back(load(id));
  return out;
}

std::vector<Checkpoint> CheckpointStore::lineage(std::string_view id) const {
  std::vector<Checkpoint> chain;
  std::set<std::string> seen;
  std::optional<std::string> next{std::string(id)};
  while (next) {
    if (!seen.insert(*next).second) {
      throw ScorerError(fmt::format("checkpoint lineage of '{}' has a cycle", id));
    }
    chain.push_back(load(*next));
    next = chain.back().parent_id;
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

double eval_nli(const Scorer& scorer, std::span<const NliExample> examples) {
  if (examples.empty()) throw InputError("eval_nli needs a non-empty corpus");
  std::vector<TextPair> pairs;
  pairs.reserve(examples.size());
  for (const NliExample& ex : examples) pairs.push_back({ex.premise(), ex.hypothesis()});
  const auto scores = scorer.score_batch(pairs);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (scores[i].argmax() == examples[i].label()) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(examples.size());
}

double eval_nli(const Checkpoint& checkpoint, const CorpusDescriptor& corpus) {
  ScorerConfig config;
  config.backend = ScorerBackend::kModel;
  config.checkpoint_ref = checkpoint.dir.string();
  config.max_len = checkpoint.config_snapshot.max_len;
  const ModelScorer scorer = ModelScorer::from_config(config);
  const auto examples = load_examples(corpus);
  return eval_nli(scorer, examples);
}

namespace {

TinyEncoder resolve_init(const TrainConfig& config, const StageInit& init) {
  if (const auto* ckpt = std::get_if<Checkpoint>(&init)) {
    return TinyEncoder::load(ckpt->dir);
  }
  const std::string& ref = std::get<std::string>(init);
  if (EncoderShape::is_reference(ref)) {
    EncoderShape shape = EncoderShape::parse(ref);
    shape.max_positions = static_cast<int>(config.max_len);
    return TinyEncoder(shape, config.seed);
  }
  if (std::filesystem::exists(std::filesystem::path(ref) / "model.json")) {
    return TinyEncoder::load(ref);
  }
  throw InputError(fmt::format(
      "cannot resolve base model '{}': expected a tiny encoder reference or a "
      "checkpoint directory",
      ref));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (a + 1) + 0xbf58476d1ce4e5b9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

StageOutcome train_stage(const TrainConfig& config, std::size_t stage_index,
                         const StageInit& init, CheckpointStore& store,
                         const TrainLog& log) {
  config.validate();
  if (stage_index >= config.stages.size()) {
    throw InputError(fmt::format("stage index {} out of range", stage_index));
  }
  const StageSpec& stage = config.stages[stage_index];

  std::vector<std::vector<NliExample>> corpora;
  const std::size_t first_stage = stage.union_with_previous ? 0 : stage_index;
  for (std::size_t s = first_stage; s <= stage_index; ++s) {
    for (const CorpusDescriptor& d : config.stages[s].corpora) {
      corpora.push_back(load_examples(d));
    }
  }
  std::vector<NliExample> train =
      concat_corpora(corpora, mix_seed(config.seed, stage_index, 0));
  if (config.max_examples_per_stage > 0 && train.size() > config.max_examples_per_stage) {
    train.erase(train.begin() + static_cast<std::ptrdiff_t>(config.max_examples_per_stage),
                train.end());
  }
  if (train.empty()) {
    throw InputError(fmt::format("stage '{}' has no training examples", stage.name));
  }
  const std::vector<NliExample> dev = load_examples(config.eval_corpus);
  if (dev.empty()) {
    throw InputError(fmt::format("eval corpus '{}' is empty", config.eval_corpus.name));
  }

  TinyEncoder encoder = resolve_init(config, init);
  if (static_cast<std::size_t>(encoder.shape().max_positions) < config.max_len) {
    throw InputError(fmt::format("max_len {} exceeds the initial model's {} positions",
                                 config.max_len, encoder.shape().max_positions));
  }
  const HashingTokenizer tokenizer = encoder.tokenizer();
  std::vector<PairEncoding> encoded;
  encoded.reserve(train.size());
  for (const NliExample& ex : train) {
    encoded.push_back(encode_pair(ex.premise(), ex.hypothesis(), config.max_len, tokenizer));
  }

  ScorerConfig eval_config;
  eval_config.backend = ScorerBackend::kModel;
  eval_config.max_len = config.max_len;

  StageOutcome outcome;
  TrainReport& report = outcome.report;
  AdamOptimizer optimizer(encoder.shape(), config.learning_rate);
  EncoderParams grads = EncoderParams::zeros(encoder.shape());
  std::vector<std::size_t> order(train.size());
  std::size_t step = 0;

  for (int epoch = 0; epoch < config.epochs_per_stage; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(config.seed, stage_index, static_cast<std::uint64_t>(epoch) + 1));
    rng.shuffle(std::span<std::size_t>(order));

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double weight = 1.0 / static_cast<double>(end - begin);
      grads.set_zero();
      double batch_loss = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        batch_loss += encoder.accumulate_gradients(encoded[order[i]],
                                                   train[order[i]].label(), grads, weight);
      }
      batch_loss *= weight;
      ++step;
      if (!std::isfinite(batch_loss) || !grads.all_finite()) {
        report.failed = true;
        report.failure = fmt::format(
            "stage '{}' diverged at step {} (epoch {}): non-finite loss or gradient",
            stage.name, step, epoch + 1);
        if (log) log(report.failure);
        return outcome;
      }
      report.loss_curve.emplace_back(step, batch_loss);
      epoch_loss += batch_loss * static_cast<double>(end - begin);
      optimizer.step(encoder.params(), grads);
    }
    report.epoch_mean_loss.push_back(epoch_loss / static_cast<double>(train.size()));

    const ModelScorer dev_scorer(encoder, eval_config, "training");
    report.dev_accuracy_per_epoch.push_back(eval_nli(dev_scorer, dev));
    if (log) {
      log(fmt::format("stage {} epoch {}: mean loss {:.4f}, dev accuracy {:.2f}%",
                      stage.name, epoch + 1, report.epoch_mean_loss.back(),
                      100.0 * report.dev_accuracy_per_epoch.back()));
    }
  }

  std::optional<std::string> parent;
  if (const auto* ckpt = std::get_if<Checkpoint>(&init)) parent = ckpt->id;
  outcome.checkpoint =
      store.save(encoder, stage_index, stage.name, std::move(parent), config, report);
  return outcome;
}

PipelineResult run_pipeline(const TrainConfig& config, CheckpointStore& store,
                            const TrainLog& log) {
  config.validate();
  PipelineResult result;
  for (std::size_t s = 0; s < config.stages.size(); ++s) {
    const StageInit init = result.checkpoints.empty()
                               ? StageInit(config.base_model_ref)
                               : StageInit(result.checkpoints.back());
    const auto fail = [&](std::string message, bool input_error) {
      result.failed = true;
      result.failed_stage = s;
      result.failure = std::move(message);
      result.failure_is_input_error = input_error;
    };
    try {
      StageOutcome outcome = train_stage(config, s, init, store, log);
      if (!outcome.checkpoint) {
        fail(outcome.report.failure, false);
        result.failed_report = std::move(outcome.report);
        return result;
      }
      result.checkpoints.push_back(std::move(*outcome.checkpoint));
    } catch (const InputError& e) {
      fail(e.what(), true);
      return result;
    } catch (const std::exception& e) {
      fail(e.what(), false);
      return result;
    }
  }
  return result;
}

}  // namespace factrank
