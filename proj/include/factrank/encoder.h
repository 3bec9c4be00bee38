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

// A small transformer encoder with a 3-way NLI head, trained from scratch
// with hand-written backpropagation. It is the model backend behind the
// model scorer and the fine-tuning pipeline.
//
// Each layer is residual multi-head self-attention followed by a residual
// ReLU feed-forward block. The classifier reads the mean of the final
// layer's outputs. Inputs sum token, position and segment embeddings;
// segment 0 covers [CLS], the premise and the first [SEP].

#ifndef FACTRANK_ENCODER_H_
#define FACTRANK_ENCODER_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "factrank/attention.h"
#include "factrank/core.h"
#include "factrank/encoding.h"
#include "factrank/tokenizer.h"

namespace factrank {

struct EncoderShape {
  int layers = 2;
  int hidden = 32;
  int heads = 2;
  int ffn = 64;
  int vocab = 4096;
  int max_positions = 128;

  // Throws InputError on non-positive sizes or hidden % heads != 0.
  void validate() const;

  // "tiny" or "tiny:layers=2,hidden=32,heads=2,ffn=64,vocab=4096".
  // max_positions is not part of the reference; callers set it.
  static bool is_reference(std::string_view ref);
  static EncoderShape parse(std::string_view ref);
  std::string to_reference() const;

  bool operator==(const EncoderShape&) const = default;
};

struct EncoderLayerParams {
  Eigen::MatrixXd query, key, value, output, output_bias;
  Eigen::MatrixXd ffn_in, ffn_in_bias, ffn_out, ffn_out_bias;
};

struct EncoderParams {
  Eigen::MatrixXd token_embedding;
  Eigen::MatrixXd position_embedding;
  Eigen::MatrixXd segment_embedding;
  std::vector<EncoderLayerParams> layers;
  Eigen::MatrixXd classifier;
  Eigen::MatrixXd classifier_bias;

  static EncoderParams zeros(const EncoderShape& shape);

  // Every parameter tensor in a fixed order (serialization and Adam rely
  // on it).
  std::vector<Eigen::MatrixXd*> tensors();
  std::vector<const Eigen::MatrixXd*> tensors() const;

  void set_zero();
  // True when every entry is finite.
  bool all_finite() const;
};

class TinyEncoder {
 public:
  // Random initialization from seed.
  TinyEncoder(EncoderShape shape, std::uint64_t seed);

  // Reads model.json and weights.bin from a checkpoint directory. Throws
  // ScorerError when they are missing or inconsistent.
  static TinyEncoder load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;

  const EncoderShape& shape() const { return shape_; }
  HashingTokenizer tokenizer() const { return HashingTokenizer(shape_.vocab); }

  EncoderParams& params() { return params_; }
  const EncoderParams& params() const { return params_; }

  // Softmax over (entailment, neutral, contradiction).
  std::array<double, 3> predict(const PairEncoding& encoding) const;

  AttentionTensor attention(const PairEncoding& encoding) const;

  // Adds weight * d(-log p_gold)/d(params) into grads. Returns the
  // unweighted loss.
  double accumulate_gradients(const PairEncoding& encoding, NliLabel gold,
                              EncoderParams& grads, double weight) const;

 private:
  struct LayerCache;
  struct ForwardPass;

  TinyEncoder(EncoderShape shape, EncoderParams params);
  ForwardPass forward(const PairEncoding& encoding) const;

  EncoderShape shape_;
  EncoderParams params_;
};

class AdamOptimizer {
 public:
  AdamOptimizer(const EncoderShape& shape, double learning_rate,
                double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);

  void step(EncoderParams& params, const EncoderParams& grads);

 private:
  double learning_rate_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long steps_ = 0;
  EncoderParams first_moment_;
  EncoderParams second_moment_;
};

}  // namespace factrank

#endif  // FACTRANK_ENCODER_H_
