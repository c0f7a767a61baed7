// Copyright 2026 The mospred Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mospred/model.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include "mospred/rng.h"

namespace mospred {

namespace {

// Fixed affine map applied to log-Mel inputs (natural-log energies span
// roughly [-23, 8]).
constexpr double kFeatureOffset = -5.0;
constexpr double kFeatureScale = 5.0;
constexpr double kLayerNormEps = 1e-5;

template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <typename T>
using ConstMatMap = Eigen::Map<const Mat<T>>;
template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using ConstRowMap = Eigen::Map<const RowVec<T>>;
template <typename T>
using RowMap = Eigen::Map<RowVec<T>>;

// Sinusoidal position table, shared across calls.
const Mat<double>& PositionTable(int positions, int d_model) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<Mat<double>>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{positions, d_model}];
  if (!slot) {
    slot = std::make_unique<Mat<double>>(positions, d_model);
    for (int t = 0; t < positions; ++t) {
      for (int i = 0; i < d_model; i += 2) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / d_model);
        (*slot)(t, i) = std::sin(t * freq);
        if (i + 1 < d_model) (*slot)(t, i + 1) = std::cos(t * freq);
      }
    }
  }
  return *slot;
}

template <typename T>
void LayerNormForward(const Mat<T>& x, const T* gain, const T* bias,
                      Mat<T>& hat, Vec<T>& rstd, Mat<T>& out) {
  const Eigen::Index n = x.rows(), d = x.cols();
  hat.resize(n, d);
  rstd.resize(n);
  out.resize(n, d);
  ConstRowMap<T> g(gain, d), b(bias, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const T mean = x.row(r).mean();
    const T var = (x.row(r).array() - mean).square().mean();
    rstd(r) = T(1) / std::sqrt(var + T(kLayerNormEps));
    hat.row(r) = (x.row(r).array() - mean) * rstd(r);
    out.row(r) = hat.row(r).cwiseProduct(g) + b;
  }
}

// Returns d(input); accumulates gain and bias gradients.
template <typename T>
Mat<T> LayerNormBackward(const Mat<T>& d_out, const Mat<T>& hat,
                         const Vec<T>& rstd, const T* gain, T* d_gain,
                         T* d_bias) {
  const Eigen::Index n = d_out.rows(), d = d_out.cols();
  ConstRowMap<T> g(gain, d);
  RowMap<T> dg(d_gain, d), db(d_bias, d);
  dg += d_out.cwiseProduct(hat).colwise().sum();
  db += d_out.colwise().sum();
  Mat<T> d_in(n, d);
  for (Eigen::Index r = 0; r < n; ++r) {
    const RowVec<T> d_hat = d_out.row(r).cwiseProduct(g);
    const T mean_d = d_hat.mean();
    const T mean_dh = d_hat.cwiseProduct(hat.row(r)).mean();
    d_in.row(r) = rstd(r) * (d_hat.array() - mean_d - hat.row(r).array() * mean_dh);
  }
  return d_in;
}

template <typename T>
T Gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
}

template <typename T>
T GeluGrad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x / std::numbers::sqrt2_v<T>));
  const T pdf = std::exp(T(-0.5) * x * x) / std::sqrt(T(2) * std::numbers::pi_v<T>);
  return cdf + x * pdf;
}

void CheckPrefixMask(const LogMelSpectrogram& s) {
  bool seen_pad = false;
  for (uint8_t m : s.mask) {
    if (m == 0) {
      seen_pad = true;
    } else if (seen_pad) {
      throw std::invalid_argument("spectrogram mask must be a valid prefix");
    }
  }
}

template <typename T>
void RunEncoder(const ParameterSet<T>& p, const LogMelSpectrogram& s,
                int locale_index, ForwardTrace<T>& tr) {
  const ModelConfig& cfg = p.config;
  if (s.num_frames != cfg.t_max || s.num_mels != cfg.n_mels ||
      s.mask.size() != static_cast<size_t>(s.num_frames) ||
      s.values.size() != static_cast<size_t>(s.num_frames) * s.num_mels) {
    throw std::invalid_argument(
        "spectrogram shape " + std::to_string(s.num_frames) + "x" +
        std::to_string(s.num_mels) + " does not match model input " +
        std::to_string(cfg.t_max) + "x" + std::to_string(cfg.n_mels));
  }
  if (p.values.size() != ParameterCount(cfg, p.vocab.size())) {
    throw std::invalid_argument("parameter vector does not match its layout");
  }
  if (locale_index < 0 || locale_index >= p.vocab.size()) {
    throw std::out_of_range("locale index out of range");
  }
  CheckPrefixMask(s);
  const ParamLayout layout(cfg, p.vocab.size());
  const T* w = p.values.data();
  const int stride = cfg.encoder.subsample_stride;
  const int d = cfg.encoder.d_model;
  const int heads = cfg.encoder.num_heads;
  const int dh = d / heads;
  const int fd = d * cfg.encoder.ffn_mult;
  const int valid = s.valid_frames();
  const int n = (valid + stride - 1) / stride;

  tr.owner = &p;
  tr.version = p.version;
  tr.locale_index = locale_index;
  tr.positions = n;

  // Strided subsampling: each position sees `stride` stacked frames.
  tr.input.setZero(n, stride * cfg.n_mels);
  for (int t = 0; t < n; ++t) {
    for (int j = 0; j < stride; ++j) {
      const int frame = t * stride + j;
      if (frame >= valid) break;
      for (int m = 0; m < cfg.n_mels; ++m) {
        tr.input(t, j * cfg.n_mels + m) =
            static_cast<T>((s.at(frame, m) - kFeatureOffset) / kFeatureScale);
      }
    }
  }
  Mat<T> x = tr.input * ConstMatMap<T>(w + layout.conv_weight, stride * cfg.n_mels, d);
  x.rowwise() += ConstRowMap<T>(w + layout.conv_bias, d);
  if (n > 0) {
    x += PositionTable(cfg.encoded_length(), d).topRows(n).template cast<T>();
  }

  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  tr.blocks.resize(cfg.encoder.num_blocks);
  for (int b = 0; b < cfg.encoder.num_blocks; ++b) {
    const BlockOffsets& o = layout.blocks[b];
    BlockCache<T>& c = tr.blocks[b];
    c.input = x;
    LayerNormForward<T>(c.input, w + o.ln1_gain, w + o.ln1_bias, c.ln1_hat,
                        c.ln1_rstd, c.h1);
    c.qkv = c.h1 * ConstMatMap<T>(w + o.qkv_weight, d, 3 * d);
    c.qkv.rowwise() += ConstRowMap<T>(w + o.qkv_bias, 3 * d);
    c.attn.resize(n, d);
    c.probs.resize(heads);
    for (int h = 0; h < heads; ++h) {
      const auto q = c.qkv.block(0, h * dh, n, dh);
      const auto k = c.qkv.block(0, d + h * dh, n, dh);
      const auto v = c.qkv.block(0, 2 * d + h * dh, n, dh);
      Mat<T>& prob = c.probs[h];
      prob = (q * k.transpose()) * scale;
      for (int r = 0; r < n; ++r) {
        const T mx = prob.row(r).maxCoeff();
        prob.row(r) = (prob.row(r).array() - mx).exp();
        prob.row(r) /= prob.row(r).sum();
      }
      c.attn.block(0, h * dh, n, dh) = prob * v;
    }
    c.mid = c.input + c.attn * ConstMatMap<T>(w + o.out_weight, d, d);
    c.mid.rowwise() += ConstRowMap<T>(w + o.out_bias, d);
    LayerNormForward<T>(c.mid, w + o.ln2_gain, w + o.ln2_bias, c.ln2_hat,
                        c.ln2_rstd, c.h2);
    c.pre_act = c.h2 * ConstMatMap<T>(w + o.ff1_weight, d, fd);
    c.pre_act.rowwise() += ConstRowMap<T>(w + o.ff1_bias, fd);
    c.act = c.pre_act.unaryExpr([](T v) { return Gelu(v); });
    x = c.mid + c.act * ConstMatMap<T>(w + o.ff2_weight, fd, d);
    x.rowwise() += ConstRowMap<T>(w + o.ff2_bias, d);
  }
  LayerNormForward<T>(x, w + layout.final_gain, w + layout.final_bias,
                      tr.final_hat, tr.final_rstd, tr.embeddings);
}

template <typename T>
void RunHead(const ParameterSet<T>& p, ForwardTrace<T>& tr) {
  const ModelConfig& cfg = p.config;
  const ParamLayout layout(cfg, p.vocab.size());
  const T* w = p.values.data();
  const int d = cfg.encoder.d_model;
  const int n = tr.positions;
  const int locale_index = tr.locale_index;
  if (n == 0) throw std::invalid_argument("cannot pool a fully masked input");
  tr.pooled = tr.embeddings.colwise().sum().transpose() / static_cast<T>(n);
  const int e = cfg.locale_emb_dim;
  tr.features.resize(d + e);
  tr.features.head(d) = tr.pooled;
  tr.features.tail(e) = ConstRowMap<T>(
      w + layout.locale_table + static_cast<size_t>(locale_index) * e, e).transpose();
  tr.y_hat = Eigen::Map<const Vec<T>>(w + layout.head_weight, d + e).dot(tr.features) +
             w[layout.head_bias];
}

}  // namespace

ModelConfig ModelConfig::Preset(const std::string& name) {
  ModelConfig cfg;
  if (name == "tiny") {
    cfg.encoder = {4, 2, 128, 4, 4};
  } else if (name == "small") {
    cfg.encoder = {4, 4, 256, 4, 4};
  } else {
    throw std::invalid_argument("unknown model preset '" + name + "'");
  }
  return cfg;
}

void ModelConfig::Validate() const {
  const EncoderConfig& e = encoder;
  if (e.subsample_stride < 1 || e.num_blocks < 0 || e.d_model < 1 ||
      e.num_heads < 1 || e.ffn_mult < 1 || locale_emb_dim < 1 || n_mels < 1 ||
      t_max < 1) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (e.d_model % e.num_heads != 0) {
    throw std::invalid_argument("d_model must be divisible by num_heads");
  }
}

int ModelConfig::encoded_length() const {
  return (t_max + encoder.subsample_stride - 1) / encoder.subsample_stride;
}

LocaleVocab::LocaleVocab() : tags_{kAnyLocale} {}

LocaleVocab::LocaleVocab(const LocaleSet& locales) : tags_{kAnyLocale} {
  for (const auto& l : locales) {
    if (l != kAnyLocale) tags_.push_back(l);
  }
}

LocaleVocab LocaleVocab::FromTags(const std::vector<std::string>& tags) {
  if (tags.empty() || tags[0] != kAnyLocale) {
    throw std::invalid_argument("locale vocabulary must start with ANY-LOC");
  }
  LocaleVocab v;
  v.tags_ = tags;
  return v;
}

int LocaleVocab::Index(const std::string& locale) const {
  for (size_t i = 1; i < tags_.size(); ++i) {
    if (tags_[i] == locale) return static_cast<int>(i);
  }
  return 0;
}

bool LocaleVocab::Contains(const std::string& locale) const {
  return std::find(tags_.begin(), tags_.end(), locale) != tags_.end();
}

ParamLayout::ParamLayout(const ModelConfig& cfg, int vocab_size) {
  cfg.Validate();
  const int d = cfg.encoder.d_model;
  const int fd = d * cfg.encoder.ffn_mult;
  conv_weight = Add("subsample.weight", cfg.encoder.subsample_stride * cfg.n_mels, d);
  conv_bias = Add("subsample.bias", 1, d);
  for (int b = 0; b < cfg.encoder.num_blocks; ++b) {
    const std::string p = "block" + std::to_string(b) + ".";
    BlockOffsets o;
    o.ln1_gain = Add(p + "ln1.gain", 1, d);
    o.ln1_bias = Add(p + "ln1.bias", 1, d);
    o.qkv_weight = Add(p + "attn.qkv.weight", d, 3 * d);
    o.qkv_bias = Add(p + "attn.qkv.bias", 1, 3 * d);
    o.out_weight = Add(p + "attn.out.weight", d, d);
    o.out_bias = Add(p + "attn.out.bias", 1, d);
    o.ln2_gain = Add(p + "ln2.gain", 1, d);
    o.ln2_bias = Add(p + "ln2.bias", 1, d);
    o.ff1_weight = Add(p + "ffn.in.weight", d, fd);
    o.ff1_bias = Add(p + "ffn.in.bias", 1, fd);
    o.ff2_weight = Add(p + "ffn.out.weight", fd, d);
    o.ff2_bias = Add(p + "ffn.out.bias", 1, d);
    blocks.push_back(o);
  }
  final_gain = Add("final_ln.gain", 1, d);
  final_bias = Add("final_ln.bias", 1, d);
  locale_table = Add("locale_embedding", vocab_size, cfg.locale_emb_dim);
  head_weight = Add("head.weight", 1, d + cfg.locale_emb_dim);
  head_bias = Add("head.bias", 1, 1);
}

size_t ParamLayout::Add(const std::string& name, int rows, int cols) {
  const size_t offset = total_;
  tensors_.push_back({name, rows, cols, offset});
  total_ += static_cast<size_t>(rows) * cols;
  return offset;
}

size_t ParameterCount(const ModelConfig& cfg, int vocab_size) {
  const size_t s = cfg.encoder.subsample_stride, d = cfg.encoder.d_model;
  const size_t f = d * cfg.encoder.ffn_mult, e = cfg.locale_emb_dim;
  const size_t block = 4 * d + (d * 3 * d + 3 * d) + (d * d + d) +
                       (d * f + f) + (f * d + d);
  return (s * cfg.n_mels * d + d) + cfg.encoder.num_blocks * block + 2 * d +
         static_cast<size_t>(vocab_size) * e + (d + e) + 1;
}

template <typename T>
bool ParameterSet<T>::AllFinite() const {
  return std::all_of(values.begin(), values.end(),
                     [](T v) { return std::isfinite(v); });
}

ModelParameters InitParams(const ModelConfig& cfg, const LocaleVocab& vocab,
                           uint64_t seed) {
  cfg.Validate();
  ModelParameters p;
  p.config = cfg;
  p.vocab = vocab;
  const ParamLayout layout(cfg, vocab.size());
  p.values.assign(layout.total(), 0.0f);
  Rng rng(seed);
  auto ends_with = [](const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  for (const TensorSpec& t : layout.tensors()) {
    float* v = p.values.data() + t.offset;
    if (ends_with(t.name, ".gain")) {
      std::fill_n(v, t.size(), 1.0f);
    } else if (t.name == "head.bias") {
      v[0] = 0.5f;
    } else if (ends_with(t.name, ".bias")) {
      // zero
    } else {
      // Fan-in is the row count for (in x out) weights and the embedding
      // width for the locale table.
      const int fan_in = t.name == "head.weight"        ? t.cols
                         : t.name == "locale_embedding" ? t.cols
                                                        : t.rows;
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (size_t i = 0; i < t.size(); ++i) {
        v[i] = static_cast<float>(rng.Uniform(-bound, bound));
      }
    }
  }
  return p;
}

template <typename T>
Vec<T> MeanPool(const Mat<T>& embeddings, const std::vector<uint8_t>& mask) {
  if (mask.size() != static_cast<size_t>(embeddings.rows())) {
    throw std::invalid_argument("mask length does not match embeddings");
  }
  Vec<T> sum = Vec<T>::Zero(embeddings.cols());
  int count = 0;
  for (Eigen::Index r = 0; r < embeddings.rows(); ++r) {
    if (!mask[r]) continue;
    sum += embeddings.row(r).transpose();
    ++count;
  }
  if (count == 0) throw std::invalid_argument("cannot pool a fully masked input");
  return sum / static_cast<T>(count);
}

template <typename T>
Encoding<T> Encode(const ParameterSet<T>& p, const LogMelSpectrogram& s) {
  ForwardTrace<T> tr;
  RunEncoder(p, s, 0, tr);
  Encoding<T> out;
  const int length = p.config.encoded_length();
  out.embeddings.setZero(length, p.config.encoder.d_model);
  out.mask.assign(length, 0);
  out.embeddings.topRows(tr.positions) = tr.embeddings;
  std::fill_n(out.mask.begin(), tr.positions, uint8_t{1});
  return out;
}

template <typename T>
Prediction PredictIndex(const ParameterSet<T>& p, const LogMelSpectrogram& s,
                        int locale_index, ForwardTrace<T>* trace) {
  ForwardTrace<T> local;
  ForwardTrace<T>& tr = trace != nullptr ? *trace : local;
  RunEncoder(p, s, locale_index, tr);
  RunHead(p, tr);
  return Prediction{static_cast<double>(tr.y_hat)};
}

template <typename T>
Prediction Predict(const ParameterSet<T>& p, const LogMelSpectrogram& s,
                   const std::string& locale, ForwardTrace<T>* trace) {
  return PredictIndex(p, s, p.vocab.Index(locale), trace);
}

template <typename T>
void Backward(const ParameterSet<T>& p, const ForwardTrace<T>& tr, T dy,
              std::span<std::type_identity_t<T>> grads) {
  if (tr.owner != &p || tr.version != p.version) {
    throw StaleTraceError("forward trace does not match current parameters");
  }
  const ModelConfig& cfg = p.config;
  const ParamLayout layout(cfg, p.vocab.size());
  if (grads.size() != layout.total()) {
    throw std::invalid_argument("gradient buffer does not match the parameter count");
  }
  const T* w = p.values.data();
  T* g = grads.data();
  const int stride = cfg.encoder.subsample_stride;
  const int d = cfg.encoder.d_model;
  const int heads = cfg.encoder.num_heads;
  const int dh = d / heads;
  const int fd = d * cfg.encoder.ffn_mult;
  const int e = cfg.locale_emb_dim;
  const int n = tr.positions;

  // Linear head.
  g[layout.head_bias] += dy;
  Eigen::Map<Vec<T>>(g + layout.head_weight, d + e) += dy * tr.features;
  const Eigen::Map<const Vec<T>> head(w + layout.head_weight, d + e);
  RowMap<T>(g + layout.locale_table + static_cast<size_t>(tr.locale_index) * e, e) +=
      dy * head.tail(e).transpose();

  // Mean pool: every position receives an equal share.
  Mat<T> d_x(n, d);
  d_x.rowwise() = (dy / static_cast<T>(n)) * head.head(d).transpose();
  d_x = LayerNormBackward<T>(d_x, tr.final_hat, tr.final_rstd,
                             w + layout.final_gain, g + layout.final_gain,
                             g + layout.final_bias);

  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  for (int b = cfg.encoder.num_blocks - 1; b >= 0; --b) {
    const BlockOffsets& o = layout.blocks[b];
    const BlockCache<T>& c = tr.blocks[b];

    // Feed-forward residual branch.
    MatMap<T>(g + o.ff2_weight, fd, d) += c.act.transpose() * d_x;
    RowMap<T>(g + o.ff2_bias, d) += d_x.colwise().sum();
    Mat<T> d_pre = d_x * ConstMatMap<T>(w + o.ff2_weight, fd, d).transpose();
    d_pre = d_pre.cwiseProduct(c.pre_act.unaryExpr([](T v) { return GeluGrad(v); }));
    MatMap<T>(g + o.ff1_weight, d, fd) += c.h2.transpose() * d_pre;
    RowMap<T>(g + o.ff1_bias, fd) += d_pre.colwise().sum();
    const Mat<T> d_h2 = d_pre * ConstMatMap<T>(w + o.ff1_weight, d, fd).transpose();
    Mat<T> d_mid = d_x + LayerNormBackward<T>(d_h2, c.ln2_hat, c.ln2_rstd,
                                              w + o.ln2_gain, g + o.ln2_gain,
                                              g + o.ln2_bias);

    // Attention residual branch.
    MatMap<T>(g + o.out_weight, d, d) += c.attn.transpose() * d_mid;
    RowMap<T>(g + o.out_bias, d) += d_mid.colwise().sum();
    const Mat<T> d_attn = d_mid * ConstMatMap<T>(w + o.out_weight, d, d).transpose();
    Mat<T> d_qkv(n, 3 * d);
    for (int h = 0; h < heads; ++h) {
      const auto q = c.qkv.block(0, h * dh, n, dh);
      const auto k = c.qkv.block(0, d + h * dh, n, dh);
      const auto v = c.qkv.block(0, 2 * d + h * dh, n, dh);
      const Mat<T>& prob = c.probs[h];
      const auto d_out = d_attn.block(0, h * dh, n, dh);
      const Mat<T> d_prob = d_out * v.transpose();
      d_qkv.block(0, 2 * d + h * dh, n, dh) = prob.transpose() * d_out;
      const Vec<T> row_dot = d_prob.cwiseProduct(prob).rowwise().sum();
      Mat<T> d_score = prob.cwiseProduct(d_prob - row_dot.replicate(1, n));
      d_score *= scale;
      d_qkv.block(0, h * dh, n, dh) = d_score * k;
      d_qkv.block(0, d + h * dh, n, dh) = d_score.transpose() * q;
    }
    MatMap<T>(g + o.qkv_weight, d, 3 * d) += c.h1.transpose() * d_qkv;
    RowMap<T>(g + o.qkv_bias, 3 * d) += d_qkv.colwise().sum();
    const Mat<T> d_h1 = d_qkv * ConstMatMap<T>(w + o.qkv_weight, d, 3 * d).transpose();
    d_x = d_mid + LayerNormBackward<T>(d_h1, c.ln1_hat, c.ln1_rstd, w + o.ln1_gain,
                                       g + o.ln1_gain, g + o.ln1_bias);
  }

  MatMap<T>(g + layout.conv_weight, stride * cfg.n_mels, d) += tr.input.transpose() * d_x;
  RowMap<T>(g + layout.conv_bias, d) += d_x.colwise().sum();
}

double SquaredError(double y_hat, double y) { return (y_hat - y) * (y_hat - y); }

double MeanSquaredError(const std::vector<double>& y_hat,
                        const std::vector<double>& y) {
  if (y_hat.size() != y.size() || y.empty()) {
    throw std::invalid_argument("loss needs equal-length non-empty batches");
  }
  double sum = 0.0;
  for (size_t i = 0; i < y.size(); ++i) sum += SquaredError(y_hat[i], y[i]);
  return sum / static_cast<double>(y.size());
}

#define MOSPRED_INSTANTIATE(T)                                                  \
  template struct ParameterSet<T>;                                              \
  template Vec<T> MeanPool<T>(const Mat<T>&, const std::vector<uint8_t>&);      \
  template Encoding<T> Encode<T>(const ParameterSet<T>&, const LogMelSpectrogram&); \
  template Prediction Predict<T>(const ParameterSet<T>&, const LogMelSpectrogram&, \
                                 const std::string&, ForwardTrace<T>*);         \
  template Prediction PredictIndex<T>(const ParameterSet<T>&,                   \
                                      const LogMelSpectrogram&, int,            \
                                      ForwardTrace<T>*);                        \
  template void Backward<T>(const ParameterSet<T>&, const ForwardTrace<T>&, T,  \
                            std::span<std::type_identity_t<T>>);

MOSPRED_INSTANTIATE(float)
MOSPRED_INSTANTIATE(double)

#undef MOSPRED_INSTANTIATE

}  // namespace mospred
