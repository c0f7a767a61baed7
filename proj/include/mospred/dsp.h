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

#ifndef MOSPRED_DSP_H_
#define MOSPRED_DSP_H_

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace mospred {

struct Waveform {
  std::vector<double> samples;  // nominally in [-1, 1]
  int sample_rate = 16000;

  // Throws std::invalid_argument on an empty or out-of-range signal.
  void Validate() const;
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct FrontendConfig {
  int target_sr = 16000;
  int n_mels = 80;
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int fft_size = 512;
  double f_min = 20.0;
  double f_max = 7600.0;
  double log_floor = 1e-10;
  int t_max = 512;

  int window_samples() const;
  int hop_samples() const;
  void Validate() const;
};

// Row-major frames x n_mels matrix of log-Mel energies, before padding.
struct FeatureMatrix {
  int num_frames = 0;
  int num_mels = 0;
  std::vector<float> values;

  float at(int frame, int mel) const { return values[static_cast<size_t>(frame) * num_mels + mel]; }
};

// Fixed-length model input. Valid frames come first; padding rows are zero.
struct LogMelSpectrogram {
  int num_frames = 0;  // T_max
  int num_mels = 0;
  std::vector<float> values;  // num_frames x num_mels, row-major
  std::vector<uint8_t> mask;  // 1 = valid frame

  int valid_frames() const;
  float at(int frame, int mel) const { return values[static_cast<size_t>(frame) * num_mels + mel]; }
  std::span<const float> row(int frame) const {
    return {values.data() + static_cast<size_t>(frame) * num_mels,
            static_cast<size_t>(num_mels)};
  }
};

// In-place iterative radix-2 FFT; size must be a power of two.
void Fft(std::vector<std::complex<double>>& data);

// HTK mel scale: 2595 * log10(1 + f / 700).
double HzToMel(double hz);
double MelToHz(double mel);
// Center frequency (Hz) of each triangular filter.
std::vector<double> MelCenterFrequencies(const FrontendConfig& cfg);

// Triangular filterbank over the fft_size/2 + 1 power-spectrum bins.
class MelFilterbank {
 public:
  explicit MelFilterbank(const FrontendConfig& cfg);
  // power.size() == fft_size / 2 + 1; out.size() == n_mels.
  void Apply(std::span<const double> power, std::span<double> out) const;
  double weight(int mel, int bin) const;

 private:
  struct Band {
    int first_bin = 0;
    std::vector<double> weights;
  };
  std::vector<Band> bands_;
};

// Polyphase windowed-sinc resampler (Kaiser, beta 8.6, 64 taps per phase).
// Returns the input unchanged when the rates already match.
Waveform Resample(const Waveform& w, int target_sr);

// Frames the signal (Hann window), takes the power spectrum, applies the mel
// filterbank and a floored natural log. Signals shorter than one window are
// zero-padded to one frame.
FeatureMatrix ComputeLogMelFrames(const Waveform& w, const FrontendConfig& cfg);
// Keeps the first t_max frames, zero-pads the rest and builds the mask.
LogMelSpectrogram PadOrTruncate(const FeatureMatrix& frames, int t_max);
LogMelSpectrogram LogMel(const Waveform& w, const FrontendConfig& cfg);

// Reads audio from disk, resamples to cfg.target_sr and extracts features.
LogMelSpectrogram ExtractFeatures(const std::filesystem::path& wav_path,
                                  const FrontendConfig& cfg);

// Spectrogram cache: "MSPC" magic, then u32 T, u32 n_mels, u32 mask length,
// T*n_mels little-endian float32 values, and one byte per mask entry.
void WriteSpectrogramCache(const LogMelSpectrogram& s,
                           const std::filesystem::path& path);
LogMelSpectrogram ReadSpectrogramCache(const std::filesystem::path& path);

}  // namespace mospred

#endif  // MOSPRED_DSP_H_
