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

#include "factrank/attention.h"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "factrank/core.h"
#include "json.hpp"

namespace factrank {

namespace {
constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();
}  // namespace

AttentionTensor::AttentionTensor(std::size_t n_layers, std::size_t n_heads,
                                 std::size_t seq_len,
                                 std::vector<double> weights)
    : n_layers_(n_layers),
      n_heads_(n_heads),
      seq_len_(seq_len),
      weights_(std::move(weights)) {
  if (n_layers == 0 || n_heads == 0 || seq_len == 0) {
    throw InputError("attention tensor dimensions must be positive");
  }
  const std::size_t expected = n_layers * n_heads * seq_len * seq_len;
  if (weights_.size() != expected) {
    throw InputError(fmt::format("attention tensor has {} weights, expected {}",
                                 weights_.size(), expected));
  }
  for (std::size_t l = 0; l < n_layers_; ++l) {
    for (std::size_t h = 0; h < n_heads_; ++h) {
      for (std::size_t q = 0; q < seq_len_; ++q) {
        double sum = 0.0;
        for (double w : row(l, h, q)) {
          if (!(w >= 0.0)) {
            throw InputError(fmt::format(
                "negative attention weight at layer {} head {} query {}", l, h, q));
          }
          sum += w;
        }
        if (std::abs(sum - 1.0) > kRowTolerance) {
          throw InputError(fmt::format(
              "attention row at layer {} head {} query {} sums to {}", l, h, q,
              sum));
        }
      }
    }
  }
}

AttentionTensor AttentionTensor::uniform(std::size_t n_layers,
                                         std::size_t n_heads,
                                         std::size_t seq_len) {
  return AttentionTensor(
      n_layers, n_heads, seq_len,
      std::vector<double>(n_layers * n_heads * seq_len * seq_len,
                          1.0 / static_cast<double>(seq_len)));
}

AttentionTensor AttentionTensor::identity(std::size_t n_layers,
                                          std::size_t n_heads,
                                          std::size_t seq_len) {
  std::vector<double> w(n_layers * n_heads * seq_len * seq_len, 0.0);
  for (std::size_t block = 0; block < n_layers * n_heads; ++block) {
    for (std::size_t q = 0; q < seq_len; ++q) {
      w[(block * seq_len + q) * seq_len + q] = 1.0;
    }
  }
  return AttentionTensor(n_layers, n_heads, seq_len, std::move(w));
}

std::string_view segment_class_name(SegmentClass c) {
  switch (c) {
    case SegmentClass::kPremise:
      return "premise";
    case SegmentClass::kHypothesis:
      return "hypothesis";
    case SegmentClass::kSpecial:
      return "special";
  }
  return "special";
}

SegmentClass parse_segment_class(std::string_view name) {
  if (name == "premise") return SegmentClass::kPremise;
  if (name == "hypothesis") return SegmentClass::kHypothesis;
  if (name == "special") return SegmentClass::kSpecial;
  throw InputError(fmt::format("unknown segment class '{}'", name));
}

SegmentMap segment_tokens(const PairEncoding& encoding) {
  SegmentMap map;
  map.classes.assign(encoding.length(), SegmentClass::kSpecial);
  for (std::size_t i = encoding.premise_span.begin; i < encoding.premise_span.end; ++i) {
    map.classes[i] = SegmentClass::kPremise;
  }
  for (std::size_t i = encoding.hypothesis_span.begin;
       i < encoding.hypothesis_span.end; ++i) {
    map.classes[i] = SegmentClass::kHypothesis;
  }
  return map;
}

CrossMassProfile cross_attention_mass(const AttentionTensor& attn,
                                      const SegmentMap& segments) {
  if (segments.size() != attn.seq_len()) {
    throw InputError(fmt::format(
        "segment map covers {} positions but the tensor has {}",
        segments.size(), attn.seq_len()));
  }
  CrossMassProfile profile;
  profile.n_layers = attn.n_layers();
  profile.n_heads = attn.n_heads();
  profile.cross_fraction.resize(attn.n_layers() * attn.n_heads());
  profile.per_layer_mean.resize(attn.n_layers());

  const auto& cls = segments.classes;
  for (std::size_t l = 0; l < attn.n_layers(); ++l) {
    double layer_sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t h = 0; h < attn.n_heads(); ++h) {
      double cross = 0.0;
      double total = 0.0;
      for (std::size_t q = 0; q < attn.seq_len(); ++q) {
        if (cls[q] == SegmentClass::kSpecial) continue;
        const auto weights = attn.row(l, h, q);
        for (std::size_t k = 0; k < attn.seq_len(); ++k) {
          if (cls[k] == SegmentClass::kSpecial) continue;
          total += weights[k];
          if (cls[k] != cls[q]) cross += weights[k];
        }
      }
      const double fraction = total > 0.0 ? cross / total : kUndefined;
      profile.cross_fraction[l * attn.n_heads() + h] = fraction;
      if (is_defined(fraction)) {
        layer_sum += fraction;
        ++defined;
      }
    }
    profile.per_layer_mean[l] =
        defined > 0 ? layer_sum / static_cast<double>(defined) : kUndefined;
  }
  return profile;
}

std::vector<KeyWeight> token_attention_slice(const AttentionTensor& attn,
                                             std::size_t layer,
                                             std::size_t query_position) {
  if (layer >= attn.n_layers()) {
    throw InputError(fmt::format("layer {} out of range (tensor has {})", layer,
                                 attn.n_layers()));
  }
  if (query_position >= attn.seq_len()) {
    throw InputError(fmt::format("query position {} out of range (length {})",
                                 query_position, attn.seq_len()));
  }
  std::vector<KeyWeight> slice(attn.seq_len());
  for (std::size_t k = 0; k < attn.seq_len(); ++k) slice[k].key = k;
  for (std::size_t h = 0; h < attn.n_heads(); ++h) {
    const auto weights = attn.row(layer, h, query_position);
    for (std::size_t k = 0; k < attn.seq_len(); ++k) slice[k].weight += weights[k];
  }
  for (KeyWeight& kw : slice) kw.weight /= static_cast<double>(attn.n_heads());
  std::stable_sort(slice.begin(), slice.end(),
                   [](const KeyWeight& a, const KeyWeight& b) {
                     return a.weight > b.weight;
                   });
  return slice;
}

LayerTrend layer_trend(const CrossMassProfile& profile) {
  const std::size_t n = profile.per_layer_mean.size();
  if (n < 2) throw InputError("layer_trend needs at least two layers");
  const std::size_t early_count = (n + 1) / 2;
  const auto mean = [&](std::size_t begin, std::size_t end) {
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t i = begin; i < end; ++i) {
      if (is_defined(profile.per_layer_mean[i])) {
        sum += profile.per_layer_mean[i];
        ++defined;
      }
    }
    return defined > 0 ? sum / static_cast<double>(defined) : kUndefined;
  };
  return {mean(0, early_count), mean(early_count, n)};
}

AttentionDump read_attention_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(fmt::format("cannot read '{}'", path.string()));
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
    const auto n_layers = doc.at("n_layers").get<std::size_t>();
    const auto n_heads = doc.at("n_heads").get<std::size_t>();
    const auto seq_len = doc.at("seq_len").get<std::size_t>();
    auto weights = doc.at("weights").get<std::vector<double>>();
    AttentionDump dump{
        AttentionTensor(n_layers, n_heads, seq_len, std::move(weights)),
        std::nullopt,
        {}};
    if (doc.contains("segments")) {
      SegmentMap map;
      for (const auto& name : doc.at("segments")) {
        map.classes.push_back(parse_segment_class(name.get<std::string>()));
      }
      dump.segments = std::move(map);
    }
    if (doc.contains("tokens")) {
      dump.tokens = doc.at("tokens").get<std::vector<std::string>>();
    }
    return dump;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(
        fmt::format("malformed attention file '{}': {}", path.string(), e.what()));
  }
}

void write_attention_dump(const std::filesystem::path& path,
                          const AttentionDump& dump) {
  nlohmann::ordered_json doc;
  doc["n_layers"] = dump.tensor.n_layers();
  doc["n_heads"] = dump.tensor.n_heads();
  doc["seq_len"] = dump.tensor.seq_len();
  doc["weights"] = dump.tensor.weights();
  if (dump.segments) {
    std::vector<std::string> names;
    for (SegmentClass c : dump.segments->classes) {
      names.emplace_back(segment_class_name(c));
    }
    doc["segments"] = names;
  }
  if (!dump.tokens.empty()) doc["tokens"] = dump.tokens;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
  out << doc.dump() << '\n';
}

namespace {
std::string format_value(double v) {
  return is_defined(v) ? fmt::format("{:.6f}", v) : "nan";
}
}  // namespace

void write_head_table(std::ostream& out, const CrossMassProfile& profile) {
  out << "layer\thead\tcross_fraction\n";
  for (std::size_t l = 0; l < profile.n_layers; ++l) {
    for (std::size_t h = 0; h < profile.n_heads; ++h) {
      out << l << '\t' << h << '\t' << format_value(profile.at(l, h)) << '\n';
    }
  }
}

void write_layer_table(std::ostream& out, const CrossMassProfile& profile) {
  out << "layer\tper_layer_mean\n";
  for (std::size_t l = 0; l < profile.n_layers; ++l) {
    out << l << '\t' << format_value(profile.per_layer_mean[l]) << '\n';
  }
}

}  // namespace factrank
