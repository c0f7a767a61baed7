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

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>

#include "mospred/wav.h"

namespace mospred {

namespace {

constexpr double kKaiserBeta = 8.6;
constexpr int kTapsPerPhase = 64;

double Sinc(double x) {
  if (std::fabs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double Kaiser(double x, double half_width) {
  const double r = x / half_width;
  if (std::fabs(r) >= 1.0) return 0.0;
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) /
         std::cyl_bessel_i(0.0, kKaiserBeta);
}

bool IsPowerOfTwo(size_t n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

void Waveform::Validate() const {
  if (samples.empty()) throw std::invalid_argument("empty waveform");
  if (sample_rate <= 0) throw std::invalid_argument("non-positive sample rate");
  for (double x : samples) {
    if (!(std::fabs(x) <= 1.0 + 1e-6)) {
      throw std::invalid_argument("waveform sample outside [-1, 1]");
    }
  }
}

int FrontendConfig::window_samples() const {
  return static_cast<int>(std::lround(window_ms * target_sr / 1000.0));
}

int FrontendConfig::hop_samples() const {
  return static_cast<int>(std::lround(hop_ms * target_sr / 1000.0));
}

void FrontendConfig::Validate() const {
  if (target_sr <= 0) throw std::invalid_argument("target_sr must be positive");
  if (n_mels < 1) throw std::invalid_argument("n_mels must be positive");
  if (!(f_min >= 0.0 && f_min < f_max && f_max <= target_sr / 2.0)) {
    throw std::invalid_argument("need 0 <= f_min < f_max <= target_sr / 2");
  }
  if (hop_samples() < 1 || window_samples() < hop_samples()) {
    throw std::invalid_argument("need window >= hop >= 1 sample");
  }
  if (!IsPowerOfTwo(static_cast<size_t>(fft_size)) ||
      fft_size < window_samples()) {
    throw std::invalid_argument("fft_size must be a power of two >= window");
  }
  if (!(log_floor > 0.0)) throw std::invalid_argument("log_floor must be > 0");
  if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
}

int LogMelSpectrogram::valid_frames() const {
  return static_cast<int>(std::count(mask.begin(), mask.end(), uint8_t{1}));
}

void Fft(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  if (!IsPowerOfTwo(n)) throw std::invalid_argument("FFT size must be a power of two");
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> step(std::cos(angle), std::sin(angle));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= step;
      }
    }
  }
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> MelCenterFrequencies(const FrontendConfig& cfg) {
  const double lo = HzToMel(cfg.f_min);
  const double hi = HzToMel(cfg.f_max);
  const double spacing = (hi - lo) / (cfg.n_mels + 1);
  std::vector<double> centers(cfg.n_mels);
  for (int m = 0; m < cfg.n_mels; ++m) centers[m] = MelToHz(lo + (m + 1) * spacing);
  return centers;
}

MelFilterbank::MelFilterbank(const FrontendConfig& cfg) {
  const double lo = HzToMel(cfg.f_min);
  const double hi = HzToMel(cfg.f_max);
  const double spacing = (hi - lo) / (cfg.n_mels + 1);
  const int num_bins = cfg.fft_size / 2 + 1;
  const double bin_hz = static_cast<double>(cfg.target_sr) / cfg.fft_size;
  bands_.resize(cfg.n_mels);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = lo + m * spacing;
    const double center = left + spacing;
    const double right = center + spacing;
    Band& band = bands_[m];
    band.first_bin = -1;
    for (int k = 0; k < num_bins; ++k) {
      const double mel = HzToMel(k * bin_hz);
      double w = 0.0;
      if (mel > left && mel <= center) {
        w = (mel - left) / (center - left);
      } else if (mel > center && mel < right) {
        w = (right - mel) / (right - center);
      }
      if (w > 0.0) {
        if (band.first_bin < 0) band.first_bin = k;
        band.weights.resize(k - band.first_bin + 1, 0.0);
        band.weights[k - band.first_bin] = w;
      }
    }
    if (band.first_bin < 0) band.first_bin = 0;
  }
}

void MelFilterbank::Apply(std::span<const double> power,
                          std::span<double> out) const {
  for (size_t m = 0; m < bands_.size(); ++m) {
    const Band& band = bands_[m];
    double sum = 0.0;
    for (size_t i = 0; i < band.weights.size(); ++i) {
      sum += band.weights[i] * power[band.first_bin + i];
    }
    out[m] = sum;
  }
}

double MelFilterbank::weight(int mel, int bin) const {
  const Band& band = bands_[mel];
  const int i = bin - band.first_bin;
  if (i < 0 || i >= static_cast<int>(band.weights.size())) return 0.0;
  return band.weights[i];
}

Waveform Resample(const Waveform& w, int target_sr) {
  if (target_sr <= 0) throw std::invalid_argument("target sample rate must be positive");
  if (w.sample_rate <= 0) throw std::invalid_argument("source sample rate must be positive");
  if (w.sample_rate == target_sr) return w;
  const int64_t g = std::gcd(static_cast<int64_t>(w.sample_rate),
                             static_cast<int64_t>(target_sr));
  const int64_t up = target_sr / g;
  const int64_t down = w.sample_rate / g;
  const int64_t n_in = static_cast<int64_t>(w.samples.size());
  const int64_t n_out = (2 * n_in * target_sr + w.sample_rate) / (2 * w.sample_rate);

  // Cutoff in cycles per input sample.
  const double cutoff = 0.5 * std::min(1.0, static_cast<double>(up) / down);
  constexpr int kHalf = kTapsPerPhase / 2;
  std::vector<double> taps(static_cast<size_t>(up) * kTapsPerPhase);
  for (int64_t phase = 0; phase < up; ++phase) {
    const double frac = static_cast<double>(phase) / up;
    double* h = taps.data() + phase * kTapsPerPhase;
    double sum = 0.0;
    for (int j = 0; j < kTapsPerPhase; ++j) {
      // Tap j multiplies input sample base - kHalf + 1 + j.
      const double x = frac + (kHalf - 1 - j);
      h[j] = 2.0 * cutoff * Sinc(2.0 * cutoff * x) * Kaiser(x, kHalf);
      sum += h[j];
    }
    for (int j = 0; j < kTapsPerPhase; ++j) h[j] /= sum;
  }

  Waveform out;
  out.sample_rate = target_sr;
  out.samples.resize(static_cast<size_t>(n_out));
  for (int64_t n = 0; n < n_out; ++n) {
    const int64_t base = n * down / up;
    const int64_t phase = n * down % up;
    const double* h = taps.data() + phase * kTapsPerPhase;
    double acc = 0.0;
    for (int j = 0; j < kTapsPerPhase; ++j) {
      const int64_t k = base - kHalf + 1 + j;
      if (k >= 0 && k < n_in) acc += h[j] * w.samples[static_cast<size_t>(k)];
    }
    out.samples[static_cast<size_t>(n)] = std::clamp(acc, -1.0, 1.0);
  }
  return out;
}

FeatureMatrix ComputeLogMelFrames(const Waveform& w, const FrontendConfig& cfg) {
  if (w.samples.empty()) throw std::invalid_argument("empty waveform");
  if (w.sample_rate != cfg.target_sr) {
    throw std::invalid_argument("waveform rate " + std::to_string(w.sample_rate) +
                                " != frontend rate " + std::to_string(cfg.target_sr));
  }
  cfg.Validate();
  const int win = cfg.window_samples();
  const int hop = cfg.hop_samples();
  const auto n = static_cast<int64_t>(w.samples.size());
  const int64_t frames = n < win ? 1 : 1 + (n - win) / hop;

  std::vector<double> window(win);
  for (int i = 0; i < win; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / win);
  }
  const MelFilterbank bank(cfg);
  const double log_floor = std::log(cfg.log_floor);

  FeatureMatrix out;
  out.num_frames = static_cast<int>(frames);
  out.num_mels = cfg.n_mels;
  out.values.resize(static_cast<size_t>(frames) * cfg.n_mels);
  std::vector<std::complex<double>> buf(cfg.fft_size);
  std::vector<double> power(cfg.fft_size / 2 + 1);
  std::vector<double> mel(cfg.n_mels);
  for (int64_t f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    const int64_t start = f * hop;
    for (int i = 0; i < win; ++i) {
      const int64_t k = start + i;
      if (k < n) buf[i] = w.samples[static_cast<size_t>(k)] * window[i];
    }
    Fft(buf);
    for (size_t k = 0; k < power.size(); ++k) power[k] = std::norm(buf[k]);
    bank.Apply(power, mel);
    for (int m = 0; m < cfg.n_mels; ++m) {
      const double v = mel[m] > cfg.log_floor ? std::log(mel[m]) : log_floor;
      out.values[static_cast<size_t>(f) * cfg.n_mels + m] = static_cast<float>(v);
    }
  }
  return out;
}

LogMelSpectrogram PadOrTruncate(const FeatureMatrix& frames, int t_max) {
  if (t_max < 1) throw std::invalid_argument("t_max must be >= 1");
  if (frames.num_frames < 1) throw std::invalid_argument("no frames to pad");
  LogMelSpectrogram out;
  out.num_frames = t_max;
  out.num_mels = frames.num_mels;
  out.values.assign(static_cast<size_t>(t_max) * frames.num_mels, 0.0f);
  out.mask.assign(t_max, 0);
  const int keep = std::min(frames.num_frames, t_max);
  std::copy_n(frames.values.begin(), static_cast<size_t>(keep) * frames.num_mels,
              out.values.begin());
  std::fill_n(out.mask.begin(), keep, uint8_t{1});
  return out;
}

LogMelSpectrogram LogMel(const Waveform& w, const FrontendConfig& cfg) {
  return PadOrTruncate(ComputeLogMelFrames(w, cfg), cfg.t_max);
}

LogMelSpectrogram ExtractFeatures(const std::filesystem::path& wav_path,
                                  const FrontendConfig& cfg) {
  return LogMel(Resample(ReadWav(wav_path), cfg.target_sr), cfg);
}

void WriteSpectrogramCache(const LogMelSpectrogram& s,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  auto put_u32 = [&](uint32_t v) {
    const char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                       static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.write(b, 4);
  };
  out.write("MSPC", 4);
  put_u32(static_cast<uint32_t>(s.num_frames));
  put_u32(static_cast<uint32_t>(s.num_mels));
  put_u32(static_cast<uint32_t>(s.mask.size()));
  for (float v : s.values) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(bits);
  }
  out.write(reinterpret_cast<const char*>(s.mask.data()),
            static_cast<std::streamsize>(s.mask.size()));
}

LogMelSpectrogram ReadSpectrogramCache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  auto get_u32 = [&] {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
      throw std::runtime_error(path.string() + ": truncated spectrogram cache");
    }
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  };
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MSPC", 4) != 0) {
    throw std::runtime_error(path.string() + ": not a spectrogram cache");
  }
  LogMelSpectrogram s;
  s.num_frames = static_cast<int>(get_u32());
  s.num_mels = static_cast<int>(get_u32());
  const uint32_t mask_len = get_u32();
  if (mask_len != static_cast<uint32_t>(s.num_frames)) {
    throw std::runtime_error(path.string() + ": mask length mismatch");
  }
  s.values.resize(static_cast<size_t>(s.num_frames) * s.num_mels);
  for (float& v : s.values) {
    const uint32_t bits = get_u32();
    std::memcpy(&v, &bits, 4);
  }
  s.mask.resize(mask_len);
  if (!in.read(reinterpret_cast<char*>(s.mask.data()), mask_len)) {
    throw std::runtime_error(path.string() + ": truncated mask");
  }
  return s;
}

}  // namespace mospred
