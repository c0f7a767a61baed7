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

#ifndef MOSPRED_MODEL_H_
#define MOSPRED_MODEL_H_

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "mospred/dsp.h"
#include "mospred/manifest.h"

namespace mospred {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

struct EncoderConfig {
  int subsample_stride = 4;
  int num_blocks = 2;
  int d_model = 128;
  int num_heads = 4;
  int ffn_mult = 4;
};

struct ModelConfig {
  EncoderConfig encoder;
  int locale_emb_dim = 64;
  int n_mels = 80;
  int t_max = 512;

  // "tiny" (2 blocks, d_model 128, 4 heads) or "small" (4 blocks, 256).
  static ModelConfig Preset(const std::string& name);
  void Validate() const;
  // Encoder positions after strided subsampling: ceil(t_max / stride).
  int encoded_length() const;
};

inline constexpr char kAnyLocale[] = "ANY-LOC";

// Index 0 is always the ANY-LOC wildcard; unknown locales resolve to it.
class LocaleVocab {
 public:
  LocaleVocab();
  explicit LocaleVocab(const LocaleSet& locales);
  static LocaleVocab FromTags(const std::vector<std::string>& tags);

  int Index(const std::string& locale) const;
  bool Contains(const std::string& locale) const;
  const std::vector<std::string>& tags() const { return tags_; }
  int size() const { return static_cast<int>(tags_.size()); }

  bool operator==(const LocaleVocab&) const = default;

 private:
  std::vector<std::string> tags_;
};

struct TensorSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  size_t offset = 0;
  size_t size() const { return static_cast<size_t>(rows) * cols; }
};

struct BlockOffsets {
  size_t ln1_gain, ln1_bias, qkv_weight, qkv_bias, out_weight, out_bias;
  size_t ln2_gain, ln2_bias, ff1_weight, ff1_bias, ff2_weight, ff2_bias;
};

// Flat parameter vector layout. Weight matrices are stored (in x out),
// row-major, so that activations multiply on the left.
class ParamLayout {
 public:
  ParamLayout(const ModelConfig& cfg, int vocab_size);

  const std::vector<TensorSpec>& tensors() const { return tensors_; }
  size_t total() const { return total_; }

  size_t conv_weight = 0, conv_bias = 0;
  std::vector<BlockOffsets> blocks;
  size_t final_gain = 0, final_bias = 0;
  size_t locale_table = 0;
  size_t head_weight = 0, head_bias = 0;

 private:
  size_t Add(const std::string& name, int rows, int cols);

  std::vector<TensorSpec> tensors_;
  size_t total_ = 0;
};

// Closed-form parameter count for a configuration and vocabulary size.
size_t ParameterCount(const ModelConfig& cfg, int vocab_size);

// Packet-aligned storage. Eigen peels reductions differently depending on
// the base address, so unaligned buffers make results depend on the heap.
template <typename T>
using ParamVector = std::vector<T, Eigen::aligned_allocator<T>>;

template <typename T>
struct ParameterSet {
  ModelConfig config;
  LocaleVocab vocab;
  ParamVector<T> values;
  // Bumped on every in-place update; forward traces record it.
  uint64_t version = 0;

  ParamLayout layout() const { return ParamLayout(config, vocab.size()); }
  bool AllFinite() const;
};

using ModelParameters = ParameterSet<float>;

template <typename To, typename From>
ParameterSet<To> CastParameters(const ParameterSet<From>& p) {
  ParameterSet<To> out;
  out.config = p.config;
  out.vocab = p.vocab;
  out.values.assign(p.values.begin(), p.values.end());
  return out;
}

// Fan-in scaled uniform weights, unit layer-norm gains, zero biases and a
// head bias of 0.5.
ModelParameters InitParams(const ModelConfig& cfg, const LocaleVocab& vocab,
                           uint64_t seed);

template <typename T>
struct Encoding {
  Mat<T> embeddings;          // encoded_length x d_model; masked rows are zero
  std::vector<uint8_t> mask;  // encoded_length
};

template <typename T>
struct BlockCache {
  Mat<T> input, ln1_hat, h1, qkv, attn, mid, ln2_hat, h2, pre_act, act;
  Vec<T> ln1_rstd, ln2_rstd;
  std::vector<Mat<T>> probs;  // one positions x positions matrix per head
};

// Activations retained by the forward pass for Backward().
template <typename T>
struct ForwardTrace {
  const void* owner = nullptr;
  uint64_t version = 0;
  int locale_index = 0;
  int positions = 0;  // unmasked encoder positions
  Mat<T> input;       // positions x (stride * n_mels)
  std::vector<BlockCache<T>> blocks;
  Mat<T> final_hat;
  Vec<T> final_rstd;
  Mat<T> embeddings;  // positions x d_model (e_1 ... e_T')
  Vec<T> pooled;      // e*
  Vec<T> features;    // [e*, e_locale]
  T y_hat = T(0);
};

struct Prediction {
  double y_hat = 0.0;
  double mos_scale() const { return 1.0 + 4.0 * y_hat; }
};

class StaleTraceError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

template <typename T>
Encoding<T> Encode(const ParameterSet<T>& p, const LogMelSpectrogram& s);

// Masked mean over rows; throws std::invalid_argument when fully masked.
template <typename T>
Vec<T> MeanPool(const Mat<T>& embeddings, const std::vector<uint8_t>& mask);

template <typename T>
Prediction Predict(const ParameterSet<T>& p, const LogMelSpectrogram& s,
                   const std::string& locale, ForwardTrace<T>* trace = nullptr);
// Same as Predict with an explicit vocabulary index.
template <typename T>
Prediction PredictIndex(const ParameterSet<T>& p, const LogMelSpectrogram& s,
                        int locale_index, ForwardTrace<T>* trace = nullptr);

// Accumulates d(loss)/d(params) into `grads` (same layout as p.values).
template <typename T>
void Backward(const ParameterSet<T>& p, const ForwardTrace<T>& trace,
              T d_loss_d_yhat, std::span<std::type_identity_t<T>> grads);

double SquaredError(double y_hat, double y);
double MeanSquaredError(const std::vector<double>& y_hat,
                        const std::vector<double>& y);

}  // namespace mospred

#endif  // MOSPRED_MODEL_H_
