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

#ifndef MOSPRED_SYNTHBENCH_H_
#define MOSPRED_SYNTHBENCH_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mospred/dsp.h"
#include "mospred/manifest.h"
#include "mospred/rng.h"

namespace mospred {

enum class ArtifactAxis { kAdditiveNoise, kDiscontinuity, kFlatProsody, kRobotize };
std::string AxisName(ArtifactAxis axis);
ArtifactAxis ParseAxisName(const std::string& name);

using AxisWeights = std::map<ArtifactAxis, double>;

// A synthetic locale: a carrier voice (pitch, formant timbre, syllable rate)
// and the artifact mix its degraded utterances exhibit.
struct SynthLocaleSpec {
  std::string locale;
  double base_pitch_hz = 120.0;
  std::vector<double> formants_hz = {700.0, 1200.0, 2600.0};
  double syllable_rate_hz = 4.0;
  AxisWeights axes = {{ArtifactAxis::kAdditiveNoise, 1.0}};
  int num_utterances = 10;

  void Validate() const;
};

struct SynthConfig {
  std::vector<SynthLocaleSpec> locales;
  double min_duration_s = 2.0;
  double max_duration_s = 6.0;
  // Severity ~ Beta(a, b) on [0, 1]; (1, 1) is uniform.
  double severity_alpha = 1.0;
  double severity_beta = 1.0;
  double rater_noise_sigma = 0.5;  // rating points
  double mean_raters = 1.4;        // 1 + Poisson(mean_raters - 1)
  int sample_rate = 16000;
  int systems_per_locale = 4;
  Timestamp start = MakeUtc(2021, 1, 1);
  Timestamp end = MakeUtc(2022, 1, 1);
  uint64_t seed = 0;

  void Validate() const;
};

// Everything needed to re-render a clean carrier with altered prosody.
struct CarrierPlan {
  double base_pitch_hz = 120.0;
  std::vector<double> formants_hz;
  double syllable_rate_hz = 4.0;
  double prosody_depth = 0.12;  // relative pitch excursion
  double slow_rate_hz = 0.5, slow_phase = 0.0;
  double fast_rate_hz = 2.0, fast_phase = 0.0;
  double declination = 0.08;  // relative pitch drop over the utterance
  double envelope_phase = 0.0;
  int num_samples = 0;
  int sample_rate = 16000;
};

struct CleanUtterance {
  Waveform wave;
  CarrierPlan plan;
};

// Formant-filtered harmonic source with a time-varying pitch contour and a
// syllable-rate amplitude envelope. Peak level 0.3.
CleanUtterance GenClean(const SynthLocaleSpec& spec, double duration_s,
                        int sample_rate, Rng& rng);
// Renders a plan with its pitch excursion scaled by `prosody_scale`.
Waveform RenderCarrier(const CarrierPlan& plan, double prosody_scale);

// Applies each axis at intensity severity * weight / max_weight:
//   flat_prosody   re-renders with pitch excursion scaled by (1 - intensity)
//   robotize       flattens each frame's spectral envelope, blended by intensity
//   additive_noise white noise at SNR 40 * (1 - intensity) dB
//   discontinuity  round(10 * intensity) non-overlapping 20 ms zero gaps
// Severity 0 returns the clean waveform unchanged.
Waveform Degrade(const CleanUtterance& clean, const AxisWeights& axes, double severity,
                 Rng& rng);

// clamp(5 - 4 * severity + N(0, sigma), 1, 5) snapped to the 0.5 grid.
std::vector<double> Rate(double severity, double sigma, int raters, Rng& rng);

struct GeneratedDataset {
  std::filesystem::path dir;
  Manifest manifest;
  std::map<std::string, double> severity;  // utterance_id -> ground truth
};

// Writes <out_dir>/manifest.jsonl, <out_dir>/wav/*.wav and
// <out_dir>/severity.csv. Each utterance draws from its own derived seed, so
// the output does not depend on `workers`.
GeneratedDataset GenDataset(const SynthConfig& cfg, const std::filesystem::path& out_dir,
                            int workers = 1);

// Built-in multilingual benchmark: `num_locales` carriers with distinct
// pitch and formants, every locale sharing the same artifact axes (with
// locale-specific weights), and a skewed size distribution starting at
// `largest_count` utterances.
SynthConfig BenchmarkConfig(int num_locales, int largest_count, uint64_t seed);

}  // namespace mospred

#endif  // MOSPRED_SYNTHBENCH_H_
