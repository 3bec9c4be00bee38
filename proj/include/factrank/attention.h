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

// Cross-segment attention statistics over an encoder's self-attention
// weights, and token-level attention slices.

#ifndef FACTRANK_ATTENTION_H_
#define FACTRANK_ATTENTION_H_

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "factrank/encoding.h"

namespace factrank {

// Attention weights indexed [layer][head][query][key]. Every query row must
// be non-negative and sum to 1 within kRowTolerance.
class AttentionTensor {
 public:
  static constexpr double kRowTolerance = 1e-5;

  AttentionTensor(std::size_t n_layers, std::size_t n_heads,
                  std::size_t seq_len, std::vector<double> weights);

  std::size_t n_layers() const { return n_layers_; }
  std::size_t n_heads() const { return n_heads_; }
  std::size_t seq_len() const { return seq_len_; }

  double at(std::size_t layer, std::size_t head, std::size_t query,
            std::size_t key) const {
    return weights_[index(layer, head, query, key)];
  }
  std::span<const double> row(std::size_t layer, std::size_t head,
                              std::size_t query) const {
    return {weights_.data() + index(layer, head, query, 0), seq_len_};
  }
  const std::vector<double>& weights() const { return weights_; }

  // Uniform attention over every position.
  static AttentionTensor uniform(std::size_t n_layers, std::size_t n_heads,
                                 std::size_t seq_len);
  // Every position attends only to itself.
  static AttentionTensor identity(std::size_t n_layers, std::size_t n_heads,
                                  std::size_t seq_len);

 private:
  std::size_t index(std::size_t layer, std::size_t head, std::size_t query,
                    std::size_t key) const {
    return ((layer * n_heads_ + head) * seq_len_ + query) * seq_len_ + key;
  }

  std::size_t n_layers_;
  std::size_t n_heads_;
  std::size_t seq_len_;
  std::vector<double> weights_;
};

enum class SegmentClass { kPremise, kHypothesis, kSpecial };

std::string_view segment_class_name(SegmentClass c);
SegmentClass parse_segment_class(std::string_view name);

struct SegmentMap {
  std::vector<SegmentClass> classes;

  std::size_t size() const { return classes.size(); }
};

// Undefined values (a head with no non-special to non-special mass) are NaN.
inline bool is_defined(double value) { return !std::isnan(value); }

struct CrossMassProfile {
  std::size_t n_layers = 0;
  std::size_t n_heads = 0;
  std::vector<double> cross_fraction;  // [layer * n_heads + head]
  std::vector<double> per_layer_mean;  // mean over defined heads

  double at(std::size_t layer, std::size_t head) const {
    return cross_fraction[layer * n_heads + head];
  }
};

SegmentMap segment_tokens(const PairEncoding& encoding);

// Per layer/head: attention mass from premise queries to hypothesis keys
// plus hypothesis queries to premise keys, divided by all mass between
// non-special positions. Special positions count in neither term.
CrossMassProfile cross_attention_mass(const AttentionTensor& attn,
                                      const SegmentMap& segments);

struct KeyWeight {
  std::size_t key = 0;
  double weight = 0.0;
};

// Head-averaged attention row of one query at one layer, heaviest key first
// (ties by ascending key position).
std::vector<KeyWeight> token_attention_slice(const AttentionTensor& attn,
                                             std::size_t layer,
                                             std::size_t query_position);

struct LayerTrend {
  double early_mean = 0.0;
  double late_mean = 0.0;
};

// Mean per-layer cross mass over the first and second half of the layers.
// With an odd layer count the middle layer belongs to the early half.
LayerTrend layer_trend(const CrossMassProfile& profile);

// On-disk attention export: a JSON document with n_layers, n_heads,
// seq_len, flat row-major "weights", and optional "segments" (class names
// per position) and "tokens".
struct AttentionDump {
  AttentionTensor tensor;
  std::optional<SegmentMap> segments;
  std::vector<std::string> tokens;
};

AttentionDump read_attention_dump(const std::filesystem::path& path);
void write_attention_dump(const std::filesystem::path& path,
                          const AttentionDump& dump);

// layer<TAB>head<TAB>cross_fraction, with "nan" for undefined heads.
void write_head_table(std::ostream& out, const CrossMassProfile& profile);
// layer<TAB>per_layer_mean.
void write_layer_table(std::ostream& out, const CrossMassProfile& profile);

}  // namespace factrank

#endif  // FACTRANK_ATTENTION_H_
