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

#include <cmath>

#include "doctest.h"
#include "mospred/checkpoint.h"
#include "mospred/rng.h"
#include "test_util.h"

namespace mospred {
namespace {

ModelConfig SmallConfig(int t_max = 32) {
  ModelConfig cfg = ModelConfig::Preset("tiny");
  cfg.t_max = t_max;
  return cfg;
}

LogMelSpectrogram RandomSpectrogram(int t_max, int n_mels, int valid, uint64_t seed) {
  Rng rng(seed);
  LogMelSpectrogram s;
  s.num_frames = t_max;
  s.num_mels = n_mels;
  s.values.assign(static_cast<size_t>(t_max) * n_mels, 0.0f);
  s.mask.assign(t_max, 0);
  for (int t = 0; t < valid; ++t) {
    s.mask[t] = 1;
    for (int m = 0; m < n_mels; ++m) {
      s.values[static_cast<size_t>(t) * n_mels + m] = static_cast<float>(-6.0 + 2.0 * rng.Normal());
    }
  }
  return s;
}

const LocaleVocab kVocab(LocaleSet{"de-DE", "en-US"});

TEST_CASE("locale vocabulary") {
  CHECK(kVocab.size() == 3);
  CHECK(kVocab.tags()[0] == kAnyLocale);
  CHECK(kVocab.Index("en-US") == 2);
  CHECK(kVocab.Index("xx-XX") == 0);
  CHECK(kVocab.Contains("de-DE"));
  CHECK_FALSE(kVocab.Contains("xx-XX"));
  CHECK(LocaleVocab::FromTags(kVocab.tags()) == kVocab);
  CHECK_THROWS(LocaleVocab::FromTags({"en-US"}));
}

TEST_CASE("config validation and presets") {
  const ModelConfig tiny = ModelConfig::Preset("tiny");
  CHECK(tiny.encoder.num_blocks == 2);
  CHECK(tiny.encoder.d_model == 128);
  CHECK(tiny.encoder.num_heads == 4);
  CHECK(tiny.locale_emb_dim == 64);
  const ModelConfig small = ModelConfig::Preset("small");
  CHECK(small.encoder.num_blocks == 4);
  CHECK(small.encoder.d_model == 256);
  CHECK_THROWS(ModelConfig::Preset("huge"));
  ModelConfig bad = tiny;
  bad.encoder.num_heads = 3;
  CHECK_THROWS_AS(bad.Validate(), std::invalid_argument);
  CHECK_THROWS_AS(InitParams(bad, kVocab, 1), std::invalid_argument);
}

TEST_CASE("tiny preset parameter count matches hand arithmetic") {
  const ModelConfig cfg = ModelConfig::Preset("tiny");
  // Subsampling 4*80 -> 128; per block: two layer norms (2 * 2 * 128),
  // qkv 128x384 + 384, out 128x128 + 128, ffn 128x512 + 512 and 512x128 + 128;
  // final norm 2 * 128; locale table 3 x 64; head 192 + 1.
  const size_t block = 4 * 128 + (128 * 384 + 384) + (128 * 128 + 128) + (128 * 512 + 512) +
                       (512 * 128 + 128);
  const size_t expected =
      (320 * 128 + 128) + 2 * block + 2 * 128 + 3 * 64 + (128 + 64) + 1;
  CHECK(expected == 438273);
  CHECK(ParameterCount(cfg, 3) == expected);
  const ModelParameters p = InitParams(cfg, kVocab, 1);
  CHECK(p.values.size() == expected);
  CHECK(p.layout().total() == expected);
}

TEST_CASE("init is deterministic with documented constants") {
  const ModelConfig cfg = SmallConfig();
  const ModelParameters a = InitParams(cfg, kVocab, 5), b = InitParams(cfg, kVocab, 5);
  CHECK(a.values == b.values);
  CHECK(InitParams(cfg, kVocab, 6).values != a.values);
  const ParamLayout layout = a.layout();
  CHECK(a.values[layout.head_bias] == 0.5f);
  for (int i = 0; i < cfg.encoder.d_model; ++i) {
    CHECK(a.values[layout.final_gain + i] == 1.0f);
    CHECK(a.values[layout.final_bias + i] == 0.0f);
  }
  // Fan-in bound on the subsampling weights.
  const double bound = 1.0 / std::sqrt(4.0 * 80.0);
  for (size_t i = 0; i < 320u * 128u; ++i) {
    CHECK(std::abs(a.values[layout.conv_weight + i]) <= bound);
  }
  CHECK(a.AllFinite());
}

TEST_CASE("encode shapes and masks") {
  ModelConfig cfg = ModelConfig::Preset("tiny");
  const ModelParameters p = InitParams(cfg, kVocab, 2);
  SUBCASE("full-size input") {
    const Encoding<float> e = Encode(p, RandomSpectrogram(512, 80, 300, 1));
    CHECK(e.embeddings.rows() == 128);
    CHECK(e.embeddings.cols() == 128);
    CHECK(e.mask.size() == 128);
    // ceil(300 / 4) = 75 valid positions.
    int valid = 0;
    for (uint8_t m : e.mask) valid += m;
    CHECK(valid == 75);
    for (int t = 75; t < 128; ++t) CHECK(e.embeddings.row(t).isZero(0.0));
  }
  SUBCASE("single valid frame") {
    const Encoding<float> e = Encode(p, RandomSpectrogram(512, 80, 1, 1));
    CHECK(e.mask[0] == 1);
    for (size_t t = 1; t < e.mask.size(); ++t) CHECK(e.mask[t] == 0);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(Encode(p, RandomSpectrogram(256, 80, 10, 1)), std::invalid_argument);
    CHECK_THROWS_AS(Encode(p, RandomSpectrogram(512, 40, 10, 1)), std::invalid_argument);
  }
  SUBCASE("non-prefix mask") {
    LogMelSpectrogram s = RandomSpectrogram(512, 80, 10, 1);
    s.mask[20] = 1;
    CHECK_THROWS_AS(Encode(p, s), std::invalid_argument);
  }
}

TEST_CASE("padding content does not change outputs") {
  const ModelConfig cfg = SmallConfig(64);
  const ModelParameters p = InitParams(cfg, kVocab, 3);
  const LogMelSpectrogram clean = RandomSpectrogram(64, 80, 37, 9);
  LogMelSpectrogram dirty = clean;
  Rng rng(4);
  for (int t = 37; t < 64; ++t) {
    for (int m = 0; m < 80; ++m) dirty.values[static_cast<size_t>(t) * 80 + m] = rng.Normal();
  }
  const Encoding<float> a = Encode(p, clean), b = Encode(p, dirty);
  CHECK(a.embeddings == b.embeddings);
  CHECK(Predict(p, clean, "en-US").y_hat == Predict(p, dirty, "en-US").y_hat);
}

TEST_CASE("mean pool") {
  Mat<double> e(3, 2);
  e << 1, 2, 1, 2, 1, 2;
  CHECK(MeanPool<double>(e, {1, 1, 1}) == Vec<double>{{1, 2}});
  Mat<double> vw(2, 2);
  vw << 3, 4, 7, 9;
  CHECK(MeanPool<double>(vw, {1, 0}) == Vec<double>{{3, 4}});
  Rng rng(8);
  Mat<double> r(5, 3);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = rng.Normal();
  const std::vector<uint8_t> mask = {1, 0, 1, 1, 0};
  const Vec<double> pooled = MeanPool<double>(r, mask);
  for (int j = 0; j < 3; ++j) {
    const double brute = (r(0, j) + r(2, j) + r(3, j)) / 3.0;
    CHECK(pooled(j) == doctest::Approx(brute).epsilon(1e-15));
  }
  CHECK_THROWS_AS(MeanPool<double>(r, {0, 0, 0, 0, 0}), std::invalid_argument);
}

TEST_CASE("linear head contracts") {
  const ModelConfig cfg = SmallConfig();
  ModelParameters p = InitParams(cfg, kVocab, 4);
  const ParamLayout layout = p.layout();
  const LogMelSpectrogram s = RandomSpectrogram(32, 80, 20, 2);
  const int d = cfg.encoder.d_model;

  SUBCASE("zero head weights give the bias") {
    for (int i = 0; i < d + cfg.locale_emb_dim; ++i) p.values[layout.head_weight + i] = 0.0f;
    CHECK(Predict(p, s, "en-US").y_hat == 0.5);
    CHECK(Predict(p, RandomSpectrogram(32, 80, 5, 3), "de-DE").y_hat == 0.5);
  }
  SUBCASE("zero locale block makes predictions locale-invariant") {
    for (int i = 0; i < cfg.locale_emb_dim; ++i) p.values[layout.head_weight + d + i] = 0.0f;
    const double y = Predict(p, s, "en-US").y_hat;
    CHECK(Predict(p, s, "de-DE").y_hat == y);
    CHECK(Predict(p, s, kAnyLocale).y_hat == y);
  }
  SUBCASE("unknown locale equals ANY-LOC") {
    CHECK(Predict(p, s, "xx-XX").y_hat == Predict(p, s, kAnyLocale).y_hat);
    CHECK(Predict(p, s, "en-US").y_hat != Predict(p, s, kAnyLocale).y_hat);
  }
  SUBCASE("untrained models predict mid-scale on average") {
    // Head weights are zero-mean, so E[y_hat] over seeds is the 0.5 bias;
    // the spread of one init is about 0.6, hence 64 seeds and a 3 sigma band.
    double sum = 0.0;
    for (uint64_t seed = 0; seed < 64; ++seed) {
      sum += Predict(InitParams(cfg, kVocab, 100 + seed), s, "en-US").y_hat;
    }
    CHECK(std::abs(sum / 64 - 0.5) < 0.25);
  }
  SUBCASE("mos scale and determinism") {
    const Prediction a = Predict(p, s, "en-US"), b = Predict(p, s, "en-US");
    CHECK(a.y_hat == b.y_hat);
    CHECK(a.mos_scale() == 1.0 + 4.0 * a.y_hat);
  }
}

TEST_CASE("loss") {
  CHECK(SquaredError(0.3, 0.3) == 0.0);
  CHECK(SquaredError(0.0, 1.0) == 1.0);
  CHECK(MeanSquaredError({0.2, 0.8}, {0.0, 1.0}) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK_THROWS(MeanSquaredError({}, {}));
}

TEST_CASE("backward head gradients and locale rows") {
  const ModelConfig cfg = SmallConfig();
  ParameterSet<double> p = CastParameters<double>(InitParams(cfg, kVocab, 6));
  const ParamLayout layout = p.layout();
  const LogMelSpectrogram s = RandomSpectrogram(32, 80, 25, 3);
  ForwardTrace<double> trace;
  Predict(p, s, "de-DE", &trace);
  std::vector<double> grads(p.values.size(), 0.0);
  const double g = 0.37;
  Backward(p, trace, g, grads);
  CHECK(grads[layout.head_bias] == g);
  const int d = cfg.encoder.d_model, e = cfg.locale_emb_dim;
  for (int i = 0; i < d; ++i) CHECK(grads[layout.head_weight + i] == doctest::Approx(g * trace.pooled(i)));
  const int used = kVocab.Index("de-DE");
  for (int row = 0; row < kVocab.size(); ++row) {
    double norm = 0.0;
    for (int j = 0; j < e; ++j) norm += std::abs(grads[layout.locale_table + row * e + j]);
    if (row == used) {
      CHECK(norm > 0.0);
    } else {
      CHECK(norm == 0.0);
    }
  }
  // Gradients accumulate.
  Backward(p, trace, g, grads);
  CHECK(grads[layout.head_bias] == 2 * g);

  ++p.version;
  CHECK_THROWS_AS(Backward(p, trace, g, grads), StaleTraceError);
  const ParameterSet<double> other = p;
  Predict(p, s, "de-DE", &trace);
  CHECK_THROWS_AS(Backward(other, trace, g, grads), StaleTraceError);
}

TEST_CASE("analytic gradients match central differences") {
  const ModelConfig cfg = SmallConfig(24);
  ParameterSet<double> p = CastParameters<double>(InitParams(cfg, kVocab, 12));
  const LogMelSpectrogram s = RandomSpectrogram(24, 80, 19, 5);
  const double target = 0.8;
  ForwardTrace<double> trace;
  const double y = Predict(p, s, "en-US", &trace).y_hat;
  std::vector<double> grads(p.values.size(), 0.0);
  Backward(p, trace, 2.0 * (y - target), grads);

  Rng rng(77);
  const double h = 1e-4;
  double worst = 0.0;
  for (int k = 0; k < 40; ++k) {
    const size_t i = rng.UniformInt(p.values.size());
    const double saved = p.values[i];
    p.values[i] = saved + h;
    const double up = SquaredError(Predict(p, s, "en-US").y_hat, target);
    p.values[i] = saved - h;
    const double down = SquaredError(Predict(p, s, "en-US").y_hat, target);
    p.values[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(numeric), std::abs(grads[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - grads[i]) / denom);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("float and double forward agree") {
  const ModelConfig cfg = SmallConfig();
  const ModelParameters p = InitParams(cfg, kVocab, 13);
  const LogMelSpectrogram s = RandomSpectrogram(32, 80, 30, 6);
  const double yf = Predict(p, s, "en-US").y_hat;
  const double yd = Predict(CastParameters<double>(p), s, "en-US").y_hat;
  CHECK(yf == doctest::Approx(yd).epsilon(1e-4));
}

TEST_CASE("checkpoint round trip and validation") {
  testing::TempDir dir("ckpt");
  const ModelParameters p = InitParams(SmallConfig(), kVocab, 21);
  SaveCheckpoint(p, dir / "a.ckpt");
  const ModelParameters back = LoadCheckpoint(dir / "a.ckpt");
  CHECK(back.values == p.values);
  CHECK(back.vocab == p.vocab);
  CHECK(back.config.t_max == p.config.t_max);
  CHECK(back.config.encoder.d_model == p.config.encoder.d_model);
  SaveCheckpoint(back, dir / "b.ckpt");
  CHECK(testing::ReadText(dir / "a.ckpt") == testing::ReadText(dir / "b.ckpt"));

  std::string bytes = testing::ReadText(dir / "a.ckpt");
  testing::WriteText(dir / "truncated.ckpt", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(LoadCheckpoint(dir / "truncated.ckpt"), CheckpointError);
  testing::WriteText(dir / "trailing.ckpt", bytes + "x");
  CHECK_THROWS_AS(LoadCheckpoint(dir / "trailing.ckpt"), CheckpointError);
  bytes[0] = 'X';
  testing::WriteText(dir / "magic.ckpt", bytes);
  CHECK_THROWS_AS(LoadCheckpoint(dir / "magic.ckpt"), CheckpointError);
  CHECK_THROWS_AS(LoadCheckpoint(dir / "missing.ckpt"), CheckpointError);
}

}  // namespace
}  // namespace mospred
