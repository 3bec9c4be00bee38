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

#include "factrank/encoder.h"

#include <cmath>
#include <cstring>
#include <fstream>

#include <fmt/format.h>

#include "factrank/rng.h"
#include "json.hpp"

namespace factrank {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;

void EncoderShape::validate() const {
  if (layers < 1 || hidden < 1 || heads < 1 || ffn < 1 || max_positions < 1) {
    throw InputError("encoder sizes must be positive");
  }
  if (hidden % heads != 0) {
    throw InputError(fmt::format("hidden width {} is not divisible by {} heads",
                                 hidden, heads));
  }
  if (vocab <= HashingTokenizer::kFirstWordId) {
    throw InputError(fmt::format("vocabulary of {} buckets is too small", vocab));
  }
}

bool EncoderShape::is_reference(std::string_view ref) {
  return ref == "tiny" || ref.starts_with("tiny:");
}

EncoderShape EncoderShape::parse(std::string_view ref) {
  if (!is_reference(ref)) {
    throw InputError(fmt::format("'{}' is not a tiny encoder reference", ref));
  }
  EncoderShape shape;
  if (ref == "tiny") return shape;
  std::string_view rest = ref.substr(5);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? "" : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw InputError(fmt::format("bad encoder option '{}' in '{}'", item, ref));
    }
    const std::string key(item.substr(0, eq));
    int value = 0;
    try {
      value = std::stoi(std::string(item.substr(eq + 1)));
    } catch (const std::exception&) {
      throw InputError(fmt::format("bad encoder option '{}' in '{}'", item, ref));
    }
    if (key == "layers") {
      shape.layers = value;
    } else if (key == "hidden") {
      shape.hidden = value;
    } else if (key == "heads") {
      shape.heads = value;
    } else if (key == "ffn") {
      shape.ffn = value;
    } else if (key == "vocab") {
      shape.vocab = value;
    } else {
      throw InputError(fmt::format("unknown encoder option '{}' in '{}'", key, ref));
    }
  }
  shape.validate();
  return shape;
}

std::string EncoderShape::to_reference() const {
  return fmt::format("tiny:layers={},hidden={},heads={},ffn={},vocab={}", layers,
                     hidden, heads, ffn, vocab);
}

EncoderParams EncoderParams::zeros(const EncoderShape& s) {
  EncoderParams p;
  p.token_embedding = MatrixXd::Zero(s.vocab, s.hidden);
  p.position_embedding = MatrixXd::Zero(s.max_positions, s.hidden);
  p.segment_embedding = MatrixXd::Zero(2, s.hidden);
  p.layers.resize(s.layers);
  for (EncoderLayerParams& l : p.layers) {
    l.query = MatrixXd::Zero(s.hidden, s.hidden);
    l.key = MatrixXd::Zero(s.hidden, s.hidden);
    l.value = MatrixXd::Zero(s.hidden, s.hidden);
    l.output = MatrixXd::Zero(s.hidden, s.hidden);
    l.output_bias = MatrixXd::Zero(1, s.hidden);
    l.ffn_in = MatrixXd::Zero(s.hidden, s.ffn);
    l.ffn_in_bias = MatrixXd::Zero(1, s.ffn);
    l.ffn_out = MatrixXd::Zero(s.ffn, s.hidden);
    l.ffn_out_bias = MatrixXd::Zero(1, s.hidden);
  }
  p.classifier = MatrixXd::Zero(s.hidden, 3);
  p.classifier_bias = MatrixXd::Zero(1, 3);
  return p;
}

std::vector<MatrixXd*> EncoderParams::tensors() {
  std::vector<MatrixXd*> out{&token_embedding, &position_embedding,
                             &segment_embedding};
  for (EncoderLayerParams& l : layers) {
    for (MatrixXd* m : {&l.query, &l.key, &l.value, &l.output, &l.output_bias,
                        &l.ffn_in, &l.ffn_in_bias, &l.ffn_out, &l.ffn_out_bias}) {
      out.push_back(m);
    }
  }
  out.push_back(&classifier);
  out.push_back(&classifier_bias);
  return out;
}

std::vector<const MatrixXd*> EncoderParams::tensors() const {
  auto mutable_view = const_cast<EncoderParams*>(this)->tensors();
  return {mutable_view.begin(), mutable_view.end()};
}

void EncoderParams::set_zero() {
  for (MatrixXd* m : tensors()) m->setZero();
}

bool EncoderParams::all_finite() const {
  for (const MatrixXd* m : tensors()) {
    if (!m->allFinite()) return false;
  }
  return true;
}

namespace {

void fill_uniform(MatrixXd& m, Rng& rng, double limit) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      m(r, c) = rng.uniform(-limit, limit);
    }
  }
}

double xavier(const MatrixXd& m) {
  return std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
}

void softmax_rows(MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double peak = m.row(r).maxCoeff();
    m.row(r) = (m.row(r).array() - peak).exp().matrix();
    m.row(r) /= m.row(r).sum();
  }
}

constexpr double kEmbeddingInit = 0.1;
constexpr char kWeightsMagic[8] = {'F', 'R', 'W', 'T', '0', '0', '0', '1'};

}  // namespace

TinyEncoder::TinyEncoder(EncoderShape shape, std::uint64_t seed)
    : shape_(shape), params_(EncoderParams::zeros(shape)) {
  shape_.validate();
  Rng rng(seed);
  fill_uniform(params_.token_embedding, rng, kEmbeddingInit);
  fill_uniform(params_.position_embedding, rng, kEmbeddingInit);
  fill_uniform(params_.segment_embedding, rng, kEmbeddingInit);
  for (EncoderLayerParams& l : params_.layers) {
    for (MatrixXd* m : {&l.query, &l.key, &l.value, &l.output, &l.ffn_in,
                        &l.ffn_out}) {
      fill_uniform(*m, rng, xavier(*m));
    }
  }
  fill_uniform(params_.classifier, rng, xavier(params_.classifier));
}

TinyEncoder::TinyEncoder(EncoderShape shape, EncoderParams params)
    : shape_(shape), params_(std::move(params)) {}

struct TinyEncoder::LayerCache {
  MatrixXd input, query, key, value;
  std::vector<MatrixXd> attention;  // one n x n matrix per head
  MatrixXd context, mid, pre_relu, relu;
};

struct TinyEncoder::ForwardPass {
  std::vector<int> segments;
  std::vector<LayerCache> layers;
  MatrixXd output;
  RowVectorXd pooled;
  Eigen::Vector3d logits;
  Eigen::Vector3d probs;
};

TinyEncoder::ForwardPass TinyEncoder::forward(const PairEncoding& enc) const {
  const auto n = static_cast<Eigen::Index>(enc.length());
  if (n > shape_.max_positions) {
    throw InputError(fmt::format("encoding of length {} exceeds the model's {} positions",
                                 n, shape_.max_positions));
  }
  const int head_dim = shape_.hidden / shape_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  ForwardPass fp;
  fp.segments.resize(n);
  MatrixXd x(n, shape_.hidden);
  for (Eigen::Index i = 0; i < n; ++i) {
    const TokenId id = enc.token_ids[i];
    if (id < 0 || id >= shape_.vocab) {
      throw InputError(fmt::format("token id {} outside vocabulary", id));
    }
    const int seg = static_cast<std::size_t>(i) >= enc.hypothesis_span.begin ? 1 : 0;
    fp.segments[i] = seg;
    x.row(i) = params_.token_embedding.row(id) +
               params_.position_embedding.row(i) +
               params_.segment_embedding.row(seg);
  }

  for (const EncoderLayerParams& lp : params_.layers) {
    LayerCache c;
    c.input = x;
    c.query = x * lp.query;
    c.key = x * lp.key;
    c.value = x * lp.value;
    c.context.resize(n, shape_.hidden);
    for (int h = 0; h < shape_.heads; ++h) {
      const auto cols = Eigen::seqN(h * head_dim, head_dim);
      MatrixXd scores = c.query(Eigen::all, cols) *
                        c.key(Eigen::all, cols).transpose() * scale;
      softmax_rows(scores);
      c.context(Eigen::all, cols) = scores * c.value(Eigen::all, cols);
      c.attention.push_back(std::move(scores));
    }
    c.mid = x + c.context * lp.output;
    c.mid.rowwise() += lp.output_bias.row(0);
    c.pre_relu = c.mid * lp.ffn_in;
    c.pre_relu.rowwise() += lp.ffn_in_bias.row(0);
    c.relu = c.pre_relu.cwiseMax(0.0);
    x = c.mid + c.relu * lp.ffn_out;
    x.rowwise() += lp.ffn_out_bias.row(0);
    fp.layers.push_back(std::move(c));
  }

  fp.output = std::move(x);
  fp.pooled = fp.output.colwise().mean();
  fp.logits = (fp.pooled * params_.classifier + params_.classifier_bias).transpose();
  const double peak = fp.logits.maxCoeff();
  fp.probs = (fp.logits.array() - peak).exp().matrix();
  fp.probs /= fp.probs.sum();
  return fp;
}

std::array<double, 3> TinyEncoder::predict(const PairEncoding& encoding) const {
  const ForwardPass fp = forward(encoding);
  return {fp.probs(0), fp.probs(1), fp.probs(2)};
}

AttentionTensor TinyEncoder::attention(const PairEncoding& encoding) const {
  const ForwardPass fp = forward(encoding);
  const std::size_t n = encoding.length();
  std::vector<double> weights;
  weights.reserve(fp.layers.size() * shape_.heads * n * n);
  for (const LayerCache& c : fp.layers) {
    for (const MatrixXd& a : c.attention) {
      for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t k = 0; k < n; ++k) weights.push_back(a(q, k));
      }
    }
  }
  return AttentionTensor(fp.layers.size(), shape_.heads, n, std::move(weights));
}

double TinyEncoder::accumulate_gradients(const PairEncoding& encoding,
                                         NliLabel gold, EncoderParams& grads,
                                         double weight) const {
  const ForwardPass fp = forward(encoding);
  const int y = static_cast<int>(gold);
  const double peak = fp.logits.maxCoeff();
  const double log_norm =
      peak + std::log((fp.logits.array() - peak).exp().sum());
  const double loss = log_norm - fp.logits(y);

  const auto n = static_cast<Eigen::Index>(encoding.length());
  const int head_dim = shape_.hidden / shape_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Eigen::RowVector3d dlogits = fp.probs.transpose();
  dlogits(y) -= 1.0;
  dlogits *= weight;
  grads.classifier += fp.pooled.transpose() * dlogits;
  grads.classifier_bias += dlogits;
  const RowVectorXd dpooled = dlogits * params_.classifier.transpose();
  MatrixXd dx = dpooled.replicate(n, 1) / static_cast<double>(n);

  for (std::size_t li = params_.layers.size(); li-- > 0;) {
    const EncoderLayerParams& lp = params_.layers[li];
    EncoderLayerParams& lg = grads.layers[li];
    const LayerCache& c = fp.layers[li];

    // Feed-forward block.
    lg.ffn_out += c.relu.transpose() * dx;
    lg.ffn_out_bias += dx.colwise().sum();
    MatrixXd dpre = (dx * lp.ffn_out.transpose())
                        .cwiseProduct((c.pre_relu.array() > 0.0).cast<double>().matrix());
    lg.ffn_in += c.mid.transpose() * dpre;
    lg.ffn_in_bias += dpre.colwise().sum();
    MatrixXd dmid = dx + dpre * lp.ffn_in.transpose();

    // Attention block.
    lg.output += c.context.transpose() * dmid;
    lg.output_bias += dmid.colwise().sum();
    const MatrixXd dcontext = dmid * lp.output.transpose();
    MatrixXd dq(n, shape_.hidden), dk(n, shape_.hidden), dv(n, shape_.hidden);
    for (int h = 0; h < shape_.heads; ++h) {
      const auto cols = Eigen::seqN(h * head_dim, head_dim);
      const MatrixXd& a = c.attention[h];
      const MatrixXd dctx_h = dcontext(Eigen::all, cols);
      const MatrixXd da = dctx_h * c.value(Eigen::all, cols).transpose();
      dv(Eigen::all, cols) = a.transpose() * dctx_h;
      const Eigen::VectorXd row_dot = da.cwiseProduct(a).rowwise().sum();
      const MatrixXd dscores =
          a.cwiseProduct(da - row_dot.replicate(1, n)) * scale;
      dq(Eigen::all, cols) = dscores * c.key(Eigen::all, cols);
      dk(Eigen::all, cols) = dscores.transpose() * c.query(Eigen::all, cols);
    }
    lg.query += c.input.transpose() * dq;
    lg.key += c.input.transpose() * dk;
    lg.value += c.input.transpose() * dv;
    dx = dmid + dq * lp.query.transpose() + dk * lp.key.transpose() +
         dv * lp.value.transpose();
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    grads.token_embedding.row(encoding.token_ids[i]) += dx.row(i);
    grads.position_embedding.row(i) += dx.row(i);
    grads.segment_embedding.row(fp.segments[i]) += dx.row(i);
  }
  return loss;
}

void TinyEncoder::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json meta;
  meta["architecture"] = "tiny-transformer";
  meta["layers"] = shape_.layers;
  meta["hidden"] = shape_.hidden;
  meta["heads"] = shape_.heads;
  meta["ffn"] = shape_.ffn;
  meta["vocab"] = shape_.vocab;
  meta["max_positions"] = shape_.max_positions;
  {
    std::ofstream out(dir / "model.json", std::ios::trunc);
    out << meta.dump(2) << '\n';
    if (!out) throw ScorerError(fmt::format("cannot write model.json in '{}'", dir.string()));
  }
  std::ofstream out(dir / "weights.bin", std::ios::binary | std::ios::trunc);
  out.write(kWeightsMagic, sizeof(kWeightsMagic));
  const auto tensors = params_.tensors();
  const std::uint64_t count = tensors.size();
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const MatrixXd* m : tensors) {
    const std::uint64_t dims[2] = {static_cast<std::uint64_t>(m->rows()),
                                   static_cast<std::uint64_t>(m->cols())};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(m->data()),
              static_cast<std::streamsize>(m->size() * sizeof(double)));
  }
  if (!out) throw ScorerError(fmt::format("cannot write weights.bin in '{}'", dir.string()));
}

TinyEncoder TinyEncoder::load(const std::filesystem::path& dir) {
  const auto fail = [&](const std::string& why) {
    return ScorerError(fmt::format("cannot load checkpoint '{}': {}", dir.string(), why));
  };
  std::ifstream meta_in(dir / "model.json");
  if (!meta_in) throw fail("model.json not found");
  EncoderShape shape;
  try {
    const auto meta = nlohmann::json::parse(meta_in);
    if (meta.at("architecture").get<std::string>() != "tiny-transformer") {
      throw fail("unsupported architecture");
    }
    shape.layers = meta.at("layers").get<int>();
    shape.hidden = meta.at("hidden").get<int>();
    shape.heads = meta.at("heads").get<int>();
    shape.ffn = meta.at("ffn").get<int>();
    shape.vocab = meta.at("vocab").get<int>();
    shape.max_positions = meta.at("max_positions").get<int>();
    shape.validate();
  } catch (const nlohmann::json::exception& e) {
    throw fail(fmt::format("bad model.json ({})", e.what()));
  } catch (const InputError& e) {
    throw fail(e.what());
  }

  std::ifstream in(dir / "weights.bin", std::ios::binary);
  if (!in) throw fail("weights.bin not found");
  char magic[sizeof(kWeightsMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kWeightsMagic, sizeof(magic)) != 0) {
    throw fail("weights.bin has a bad header");
  }
  EncoderParams params = EncoderParams::zeros(shape);
  auto tensors = params.tensors();
  std::uint64_t count = 0;
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || count != tensors.size()) throw fail("tensor count mismatch");
  for (MatrixXd* m : tensors) {
    std::uint64_t dims[2] = {0, 0};
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || dims[0] != static_cast<std::uint64_t>(m->rows()) ||
        dims[1] != static_cast<std::uint64_t>(m->cols())) {
      throw fail("tensor shape mismatch");
    }
    in.read(reinterpret_cast<char*>(m->data()),
            static_cast<std::streamsize>(m->size() * sizeof(double)));
    if (!in) throw fail("weights.bin is truncated");
  }
  return TinyEncoder(shape, std::move(params));
}

AdamOptimizer::AdamOptimizer(const EncoderShape& shape, double learning_rate,
                             double beta1, double beta2, double epsilon)
    : learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon),
      first_moment_(EncoderParams::zeros(shape)),
      second_moment_(EncoderParams::zeros(shape)) {}

void AdamOptimizer::step(EncoderParams& params, const EncoderParams& grads) {
  ++steps_;
  const double correction1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
  const double correction2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
  auto p = params.tensors();
  const auto g = grads.tensors();
  auto m = first_moment_.tensors();
  auto v = second_moment_.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i]->array() = beta1_ * m[i]->array() + (1.0 - beta1_) * g[i]->array();
    v[i]->array() = beta2_ * v[i]->array() + (1.0 - beta2_) * g[i]->array().square();
    p[i]->array() -= learning_rate_ * (m[i]->array() / correction1) /
                     ((v[i]->array() / correction2).sqrt() + epsilon_);
  }
}

}  // namespace factrank
