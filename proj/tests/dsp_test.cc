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

#include "mospred/dsp.h"

#include <cmath>
#include <complex>
#include <numbers>

#include "doctest.h"
#include "mospred/features.h"
#include "mospred/rng.h"
#include "mospred/wav.h"
#include "test_util.h"

namespace mospred {
namespace {

using testing::TempDir;

Waveform Sine(double hz, double amplitude, int sr, int n, double phase = 0.0) {
  Waveform w;
  w.sample_rate = sr;
  w.samples.resize(n);
  for (int i = 0; i < n; ++i) {
    w.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * i / sr + phase);
  }
  return w;
}

// Amplitude of a known-frequency sinusoid by least squares against sin/cos
// over [begin, end).
double FitAmplitude(const std::vector<double>& x, double hz, int sr, size_t begin, size_t end) {
  double ss = 0, sc = 0, cc = 0, xs = 0, xc = 0;
  for (size_t i = begin; i < end; ++i) {
    const double s = std::sin(2.0 * std::numbers::pi * hz * i / sr);
    const double c = std::cos(2.0 * std::numbers::pi * hz * i / sr);
    ss += s * s;
    sc += s * c;
    cc += c * c;
    xs += x[i] * s;
    xc += x[i] * c;
  }
  const double det = ss * cc - sc * sc;
  const double a = (xs * cc - xc * sc) / det;
  const double b = (xc * ss - xs * sc) / det;
  return std::hypot(a, b);
}

// O(N^2) DFT magnitude at bin k.
double DftMagnitude(const std::vector<double>& x, size_t k) {
  std::complex<double> acc = 0.0;
  const double n = static_cast<double>(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * k * i / n);
  }
  return std::abs(acc);
}

// Independent log-Mel of the frame starting at `start`: direct DFT, HTK mel
// triangles evaluated in the mel domain.
std::vector<double> OracleLogMelFrame(const std::vector<double>& x, size_t start,
                                      const FrontendConfig& cfg) {
  const int win = static_cast<int>(std::lround(cfg.window_ms * cfg.target_sr / 1000.0));
  const int n = cfg.fft_size;
  std::vector<double> power(n / 2 + 1);
  for (int k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (int i = 0; i < win && start + i < x.size(); ++i) {
      const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
      acc += x[start + i] * hann * std::polar(1.0, -2.0 * std::numbers::pi * k * i / n);
    }
    power[k] = std::norm(acc);
  }
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  const double lo = mel(cfg.f_min), hi = mel(cfg.f_max);
  std::vector<double> out(cfg.n_mels);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double l = lo + (hi - lo) * m / (cfg.n_mels + 1);
    const double c = lo + (hi - lo) * (m + 1) / (cfg.n_mels + 1);
    const double r = lo + (hi - lo) * (m + 2) / (cfg.n_mels + 1);
    double e = 0.0;
    for (int k = 0; k <= n / 2; ++k) {
      const double v = mel(k * static_cast<double>(cfg.target_sr) / n);
      const double w = std::max(0.0, std::min((v - l) / (c - l), (r - v) / (r - c)));
      e += w * power[k];
    }
    out[m] = std::log(std::max(e, cfg.log_floor));
  }
  return out;
}

TEST_CASE("resample identity and length arithmetic") {
  const Waveform w = Sine(440, 0.5, 16000, 1234);
  const Waveform same = Resample(w, 16000);
  CHECK(same.samples == w.samples);
  CHECK(Resample(Sine(440, 0.5, 48000, 4800), 16000).samples.size() == 1600);
  CHECK(Resample(Sine(440, 0.5, 44100, 44100), 16000).samples.size() == 16000);
  CHECK(Resample(Sine(440, 0.5, 8000, 333), 16000).samples.size() == 666);
  CHECK_THROWS_AS(Resample(w, 0), std::invalid_argument);
}

TEST_CASE("upsampled 440 Hz sine keeps its frequency and amplitude") {
  const Waveform in = Sine(440, 0.5, 8000, 8000);
  const Waveform out = Resample(in, 16000);
  REQUIRE(out.sample_rate == 16000);
  REQUIRE(out.samples.size() == 16000);
  // 1 s at 16 kHz: bin k is k Hz; search the peak below 2 kHz.
  size_t peak = 1;
  double best = 0.0;
  for (size_t k = 1; k < 2000; k += 1) {
    const double m = DftMagnitude(out.samples, k);
    if (m > best) {
      best = m;
      peak = k;
    }
  }
  CHECK(std::abs(static_cast<double>(peak) - 440.0) <= 1.0);
  const double amp = FitAmplitude(out.samples, 440, 16000, 500, 15500);
  CHECK(std::abs(amp - 0.5) / 0.5 < 0.01);
}

TEST_CASE("down and up round trip preserves band-limited sines") {
  for (double hz : {300.0, 1000.0, 2500.0, 3000.0}) {
    CAPTURE(hz);
    const Waveform in = Sine(hz, 0.6, 16000, 16000, 0.3);
    const Waveform back = Resample(Resample(in, 8000), 16000);
    REQUIRE(back.samples.size() == in.samples.size());
    const double amp = FitAmplitude(back.samples, hz, 16000, 800, 15200);
    CHECK(std::abs(amp - 0.6) / 0.6 < 0.02);
  }
}

TEST_CASE("frame counts") {
  FrontendConfig cfg;
  CHECK(cfg.window_samples() == 400);
  CHECK(cfg.hop_samples() == 160);
  // 1 + floor((16000 - 400) / 160) = 98.
  CHECK(ComputeLogMelFrames(Sine(100, 0.1, 16000, 16000), cfg).num_frames == 98);
  CHECK(ComputeLogMelFrames(Sine(100, 0.1, 16000, 399), cfg).num_frames == 1);
  CHECK(ComputeLogMelFrames(Sine(100, 0.1, 16000, 560), cfg).num_frames == 2);
  Waveform empty;
  empty.sample_rate = 16000;
  CHECK_THROWS_AS(ComputeLogMelFrames(empty, cfg), std::invalid_argument);
  CHECK_THROWS_AS(ComputeLogMelFrames(Sine(100, 0.1, 8000, 8000), cfg), std::invalid_argument);
}

TEST_CASE("digital silence maps to the log floor") {
  FrontendConfig cfg;
  Waveform w;
  w.sample_rate = 16000;
  w.samples.assign(4000, 0.0);
  const FeatureMatrix f = ComputeLogMelFrames(w, cfg);
  const float floor_value = static_cast<float>(std::log(1e-10));
  for (float v : f.values) CHECK(v == floor_value);
}

TEST_CASE("log-mel matches an independent DFT and filterbank oracle") {
  FrontendConfig cfg;
  Rng rng(11);
  Waveform w;
  w.sample_rate = 16000;
  for (int i = 0; i < 2000; ++i) {
    w.samples.push_back(0.3 * std::sin(2.0 * std::numbers::pi * 523.0 * i / 16000) +
                        0.05 * rng.Normal());
  }
  const FeatureMatrix f = ComputeLogMelFrames(w, cfg);
  for (int frame : {0, 3, f.num_frames - 1}) {
    const auto oracle = OracleLogMelFrame(w.samples, static_cast<size_t>(frame) * 160, cfg);
    for (int m = 0; m < cfg.n_mels; ++m) {
      CHECK(f.at(frame, m) == doctest::Approx(oracle[m]).epsilon(1e-5));
    }
  }
}

TEST_CASE("1 kHz sine peaks in the mel bin centred nearest 1 kHz") {
  FrontendConfig cfg;
  const Waveform w = Sine(1000, 0.5, 16000, 8000);
  const FeatureMatrix f = ComputeLogMelFrames(w, cfg);
  auto mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  const double lo = mel(cfg.f_min), hi = mel(cfg.f_max);
  int nearest = 0;
  double best = 1e300;
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double center_mel = lo + (hi - lo) * (m + 1) / (cfg.n_mels + 1);
    const double center_hz = 700.0 * (std::pow(10.0, center_mel / 2595.0) - 1.0);
    if (std::abs(center_hz - 1000.0) < best) {
      best = std::abs(center_hz - 1000.0);
      nearest = m;
    }
  }
  const auto centers = MelCenterFrequencies(cfg);
  CHECK(centers[nearest] == doctest::Approx(1000.0).epsilon(0.05));
  for (int t = 0; t < f.num_frames; ++t) {
    int arg = 0;
    for (int m = 1; m < cfg.n_mels; ++m) {
      if (f.at(t, m) > f.at(t, arg)) arg = m;
    }
    CHECK(arg == nearest);
  }
}

TEST_CASE("log-mel is scale-monotone") {
  FrontendConfig cfg;
  Rng rng(2);
  Waveform w;
  w.sample_rate = 16000;
  for (int i = 0; i < 3000; ++i) w.samples.push_back(0.2 * rng.Uniform(-1.0, 1.0));
  Waveform louder = w;
  for (double& v : louder.samples) v *= 3.0;
  const FeatureMatrix a = ComputeLogMelFrames(w, cfg), b = ComputeLogMelFrames(louder, cfg);
  for (size_t i = 0; i < a.values.size(); ++i) CHECK(b.values[i] >= a.values[i]);
}

FeatureMatrix Ramp(int frames, int mels) {
  FeatureMatrix f;
  f.num_frames = frames;
  f.num_mels = mels;
  for (int i = 0; i < frames * mels; ++i) f.values.push_back(static_cast<float>(i + 1));
  return f;
}

TEST_CASE("pad or truncate") {
  SUBCASE("pad") {
    const LogMelSpectrogram s = PadOrTruncate(Ramp(100, 4), 200);
    CHECK(s.num_frames == 200);
    CHECK(s.valid_frames() == 100);
    for (int t = 0; t < 200; ++t) {
      CHECK(s.mask[t] == (t < 100 ? 1 : 0));
      for (int m = 0; m < 4; ++m) {
        if (t >= 100) CHECK(s.at(t, m) == 0.0f);
      }
    }
    CHECK(s.at(99, 3) == 400.0f);
  }
  SUBCASE("exact") {
    const FeatureMatrix f = Ramp(200, 4);
    const LogMelSpectrogram s = PadOrTruncate(f, 200);
    CHECK(s.values == f.values);
    CHECK(s.valid_frames() == 200);
  }
  SUBCASE("truncate keeps the start") {
    const LogMelSpectrogram s = PadOrTruncate(Ramp(250, 4), 200);
    CHECK(s.valid_frames() == 200);
    CHECK(s.at(199, 3) == 800.0f);
  }
  CHECK_THROWS_AS(PadOrTruncate(Ramp(5, 4), 0), std::invalid_argument);
}

TEST_CASE("wav round trip and spectrogram cache") {
  TempDir dir("dsp");
  const Waveform w = Sine(330, 0.4, 22050, 5000);
  WriteWav(w, dir / "a.wav");
  const Waveform back = ReadWav(dir / "a.wav");
  CHECK(back.sample_rate == 22050);
  REQUIRE(back.samples.size() == w.samples.size());
  for (size_t i = 0; i < w.samples.size(); ++i) {
    CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1.0 / 32767.0);
  }
  FrontendConfig cfg;
  cfg.t_max = 64;
  const LogMelSpectrogram s = ExtractFeatures(dir / "a.wav", cfg);
  CHECK(s.num_frames == 64);
  CHECK(s.valid_frames() == 1 + (16000 * 5000 / 22050 - 400) / 160);
  WriteSpectrogramCache(s, dir / "a.mspc");
  const LogMelSpectrogram c = ReadSpectrogramCache(dir / "a.mspc");
  CHECK(c.values == s.values);
  CHECK(c.mask == s.mask);

  testing::WriteText(dir / "bad.wav", "RIFF....WAVEjunk");
  CHECK_THROWS_AS(ReadWav(dir / "bad.wav"), WavError);
}

TEST_CASE("feature bank matches direct extraction with and without workers") {
  TempDir dir("bank");
  std::vector<RatingRecord> recs;
  for (int i = 0; i < 6; ++i) {
    const std::string id = "u" + std::to_string(i);
    WriteWav(Sine(200.0 + 50 * i, 0.3, 16000, 3000 + 500 * i), dir / (id + ".wav"));
    RatingRecord r = testing::MakeRecord(id, "en-US", {3.0});
    r.audio_path = id + ".wav";
    recs.push_back(r);
  }
  Manifest m(recs);
  m.set_base_dir(dir.path());
  FrontendConfig cfg;
  cfg.t_max = 48;
  const FeatureBank serial = BuildFeatureBank(m, cfg);
  const FeatureBank parallel = BuildFeatureBank(m, cfg, dir / "cache", 3);
  const FeatureBank cached = BuildFeatureBank(m, cfg, dir / "cache", 1);
  for (const auto& r : recs) {
    const LogMelSpectrogram direct = ExtractFeatures(dir / r.audio_path, cfg);
    CHECK(serial.at(r.utterance_id).values == direct.values);
    CHECK(parallel.at(r.utterance_id).values == direct.values);
    CHECK(cached.at(r.utterance_id).values == direct.values);
  }
}

}  // namespace
}  // namespace mospred
