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

#include "mospred/checkpoint.h"

#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace mospred {

namespace {

constexpr char kMagic[8] = {'M', 'O', 'S', 'P', 'C', 'K', 'P', 'T'};
constexpr uint32_t kFormatVersion = 1;

class Writer {
 public:
  void U32(uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>(v >> (8 * i)));
  }
  void I32(int32_t v) { U32(static_cast<uint32_t>(v)); }
  void F32(float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    U32(bits);
  }
  void Str(const std::string& s) {
    U32(static_cast<uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void Raw(const char* p, size_t n) { bytes_.insert(bytes_.end(), p, p + n); }
  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}
  uint32_t U32() {
    Need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  int32_t I32() { return static_cast<int32_t>(U32()); }
  float F32() {
    const uint32_t bits = U32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string Str() {
    const uint32_t n = U32();
    Need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  void Magic() {
    Need(sizeof(kMagic));
    if (std::memcmp(bytes_.data(), kMagic, sizeof(kMagic)) != 0) {
      throw CheckpointError("not a mospred checkpoint");
    }
    pos_ += sizeof(kMagic);
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(size_t n) const {
    if (pos_ + n > bytes_.size()) throw CheckpointError("truncated checkpoint");
  }
  std::vector<char> bytes_;
  size_t pos_ = 0;
};

}  // namespace

void SaveCheckpoint(const ModelParameters& params,
                    const std::filesystem::path& path) {
  const ParamLayout layout = params.layout();
  if (params.values.size() != layout.total()) {
    throw CheckpointError("parameter vector does not match its config");
  }
  Writer w;
  w.Raw(kMagic, sizeof(kMagic));
  w.U32(kFormatVersion);
  const ModelConfig& c = params.config;
  for (int v : {c.encoder.subsample_stride, c.encoder.num_blocks, c.encoder.d_model,
                c.encoder.num_heads, c.encoder.ffn_mult, c.locale_emb_dim, c.n_mels,
                c.t_max}) {
    w.I32(v);
  }
  w.U32(static_cast<uint32_t>(params.vocab.size()));
  for (const auto& tag : params.vocab.tags()) w.Str(tag);
  w.U32(static_cast<uint32_t>(layout.tensors().size()));
  for (const TensorSpec& t : layout.tensors()) {
    w.Str(t.name);
    w.U32(static_cast<uint32_t>(t.rows));
    w.U32(static_cast<uint32_t>(t.cols));
    for (size_t i = 0; i < t.size(); ++i) w.F32(params.values[t.offset + i]);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw CheckpointError("short write to " + path.string());
}

ModelParameters LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  Reader r(std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>()));
  r.Magic();
  const uint32_t version = r.U32();
  if (version != kFormatVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelParameters p;
  ModelConfig& c = p.config;
  c.encoder.subsample_stride = r.I32();
  c.encoder.num_blocks = r.I32();
  c.encoder.d_model = r.I32();
  c.encoder.num_heads = r.I32();
  c.encoder.ffn_mult = r.I32();
  c.locale_emb_dim = r.I32();
  c.n_mels = r.I32();
  c.t_max = r.I32();
  try {
    c.Validate();
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid stored config: ") + e.what());
  }
  const uint32_t vocab_size = r.U32();
  std::vector<std::string> tags;
  for (uint32_t i = 0; i < vocab_size; ++i) tags.push_back(r.Str());
  try {
    p.vocab = LocaleVocab::FromTags(tags);
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(e.what());
  }
  const ParamLayout layout = p.layout();
  const uint32_t count = r.U32();
  if (count != layout.tensors().size()) {
    throw CheckpointError("tensor count " + std::to_string(count) +
                          " does not match config (" +
                          std::to_string(layout.tensors().size()) + ")");
  }
  p.values.assign(layout.total(), 0.0f);
  for (const TensorSpec& t : layout.tensors()) {
    const std::string name = r.Str();
    const auto rows = static_cast<int>(r.U32());
    const auto cols = static_cast<int>(r.U32());
    if (name != t.name || rows != t.rows || cols != t.cols) {
      throw CheckpointError("tensor '" + name + "' " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " does not match expected '" +
                            t.name + "' " + std::to_string(t.rows) + "x" +
                            std::to_string(t.cols));
    }
    for (size_t i = 0; i < t.size(); ++i) p.values[t.offset + i] = r.F32();
  }
  if (!r.AtEnd()) throw CheckpointError("trailing bytes in checkpoint");
  return p;
}

}  // namespace mospred
