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

#include "mospred/synthbench.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "mospred/csv.h"
#include "mospred/wav.h"

namespace mospred {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPeakLevel = 0.3;
constexpr double kMaxHarmonicHz = 7000.0;
constexpr int kAmplitudeUpdate = 64;
constexpr int kRobotFrame = 512;
constexpr int kRobotHop = 128;
constexpr int kEnvelopeHalfWidth = 6;  // bins
constexpr int kMaxGaps = 10;
constexpr double kGapSeconds = 0.020;
constexpr double kMaxSnrDb = 40.0;

double FormantResponse(double f, const std::vector<double>& formants) {
  double r = 0.02;
  for (double fc : formants) {
    const double bw = 80.0 + 0.1 * fc;
    const double u = (f - fc) / bw;
    r += 1.0 / (1.0 + u * u);
  }
  return r;
}

double Gamma(double shape, Rng& rng) {
  // Marsaglia-Tsang; shapes below one use the boost u^(1/a).
  if (shape < 1.0) {
    const double u = rng.Uniform();
    return Gamma(shape + 1.0, rng) * std::pow(u > 0.0 ? u : 1e-300, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x, v;
    do {
      x = rng.Normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.Uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Beta(double a, double b, Rng& rng) {
  if (a == 1.0 && b == 1.0) return rng.Uniform();
  const double x = Gamma(a, rng);
  const double y = Gamma(b, rng);
  return x / (x + y);
}

double Power(const std::vector<double>& x) {
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return x.empty() ? 0.0 : sum / static_cast<double>(x.size());
}

void Robotize(std::vector<double>& x, double intensity) {
  const int n = static_cast<int>(x.size());
  if (n < kRobotFrame || intensity <= 0.0) return;
  const double input_power = Power(x);
  std::vector<double> window(kRobotFrame);
  for (int i = 0; i < kRobotFrame; ++i) {
    window[i] = 0.5 - 0.5 * std::cos(kTwoPi * i / kRobotFrame);
  }
  std::vector<double> out(n, 0.0), norm(n, 0.0);
  std::vector<std::complex<double>> buf(kRobotFrame);
  std::vector<double> mag(kRobotFrame / 2 + 1), env(kRobotFrame / 2 + 1);
  for (int start = 0; start + kRobotFrame <= n; start += kRobotHop) {
    for (int i = 0; i < kRobotFrame; ++i) buf[i] = x[start + i] * window[i];
    Fft(buf);
    const int bins = kRobotFrame / 2 + 1;
    for (int k = 0; k < bins; ++k) mag[k] = std::abs(buf[k]);
    double env_max = 0.0, env_mean = 0.0;
    for (int k = 0; k < bins; ++k) {
      const int lo = std::max(0, k - kEnvelopeHalfWidth);
      const int hi = std::min(bins - 1, k + kEnvelopeHalfWidth);
      double s = 0.0;
      for (int j = lo; j <= hi; ++j) s += mag[j];
      env[k] = s / (hi - lo + 1);
      env_max = std::max(env_max, env[k]);
      env_mean += env[k];
    }
    env_mean /= bins;
    if (env_max > 0.0) {
      const double floor = 1e-3 * env_max;
      for (int k = 0; k < bins; ++k) {
        const double gain = std::pow(env_mean / std::max(env[k], floor), intensity);
        buf[k] *= gain;
        if (k > 0 && k < kRobotFrame / 2) buf[kRobotFrame - k] = std::conj(buf[k]);
      }
    }
    // Inverse transform through the conjugate trick.
    for (auto& c : buf) c = std::conj(c);
    Fft(buf);
    for (int i = 0; i < kRobotFrame; ++i) {
      const double v = buf[i].real() / kRobotFrame;
      out[start + i] += v * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }
  for (int i = 0; i < n; ++i) {
    // Edge samples outside full frame coverage keep their dry value.
    x[i] = norm[i] > 1e-3 ? out[i] / norm[i] : x[i];
  }
  const double output_power = Power(x);
  if (output_power > 0.0) {
    const double g = std::sqrt(input_power / output_power);
    for (double& v : x) v *= g;
  }
}

void AddNoise(std::vector<double>& x, double intensity, Rng& rng) {
  const double snr_db = kMaxSnrDb * (1.0 - intensity);
  const double sigma = std::sqrt(Power(x) / std::pow(10.0, snr_db / 10.0));
  for (double& v : x) v += sigma * rng.Normal();
}

void InsertGaps(std::vector<double>& x, double intensity, int sample_rate, Rng& rng) {
  const int gaps = static_cast<int>(std::lround(kMaxGaps * intensity));
  const auto len = static_cast<int64_t>(std::lround(kGapSeconds * sample_rate));
  const auto n = static_cast<int64_t>(x.size());
  // Gaps keep one sample of clearance from the edges and from each other so
  // each one is a separate zero run.
  if (gaps == 0 || n < len + 2) return;
  std::vector<int64_t> starts;
  for (int tries = 0; tries < 1000 && static_cast<int>(starts.size()) < gaps; ++tries) {
    const int64_t s = 1 + static_cast<int64_t>(rng.UniformInt(static_cast<uint64_t>(n - len - 1)));
    const bool clear = std::all_of(starts.begin(), starts.end(), [&](int64_t o) {
      return s + len + 1 <= o || o + len + 1 <= s;
    });
    if (clear) starts.push_back(s);
  }
  for (int64_t s : starts) std::fill_n(x.begin() + s, len, 0.0);
}

double AxisIntensity(const AxisWeights& axes, ArtifactAxis axis, double severity) {
  auto it = axes.find(axis);
  if (it == axes.end() || it->second <= 0.0) return 0.0;
  double max_w = 0.0;
  for (const auto& [_, w] : axes) max_w = std::max(max_w, w);
  return severity * it->second / max_w;
}

}  // namespace

std::string AxisName(ArtifactAxis axis) {
  switch (axis) {
    case ArtifactAxis::kAdditiveNoise:
      return "additive_noise";
    case ArtifactAxis::kDiscontinuity:
      return "discontinuity";
    case ArtifactAxis::kFlatProsody:
      return "flat_prosody";
    case ArtifactAxis::kRobotize:
      return "robotize";
  }
  return "unknown";
}

ArtifactAxis ParseAxisName(const std::string& name) {
  for (ArtifactAxis a : {ArtifactAxis::kAdditiveNoise, ArtifactAxis::kDiscontinuity,
                         ArtifactAxis::kFlatProsody, ArtifactAxis::kRobotize}) {
    if (AxisName(a) == name) return a;
  }
  throw std::invalid_argument("unknown artifact axis '" + name + "'");
}

void SynthLocaleSpec::Validate() const {
  if (locale.empty()) throw std::invalid_argument("synthetic locale needs a tag");
  if (!(base_pitch_hz >= 80.0 && base_pitch_hz <= 400.0)) {
    throw std::invalid_argument(locale + ": base pitch must lie in [80, 400] Hz");
  }
  if (formants_hz.empty()) throw std::invalid_argument(locale + ": no formants");
  for (double f : formants_hz) {
    if (!(f > 0.0 && f < 8000.0)) throw std::invalid_argument(locale + ": bad formant");
  }
  if (!(syllable_rate_hz > 0.0)) throw std::invalid_argument(locale + ": bad syllable rate");
  if (axes.empty()) throw std::invalid_argument(locale + ": needs an artifact axis");
  double total = 0.0;
  for (const auto& [axis, w] : axes) {
    if (!(w >= 0.0)) throw std::invalid_argument(locale + ": negative axis weight");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw std::invalid_argument(locale + ": axis weights must sum to 1");
  }
  if (num_utterances < 0) throw std::invalid_argument(locale + ": negative count");
}

void SynthConfig::Validate() const {
  if (locales.empty()) throw std::invalid_argument("no synthetic locales");
  LocaleSet seen;
  for (const auto& l : locales) {
    l.Validate();
    if (!seen.insert(l.locale).second) {
      throw std::invalid_argument("duplicate synthetic locale " + l.locale);
    }
  }
  if (!(min_duration_s > 0.0 && max_duration_s >= min_duration_s)) {
    throw std::invalid_argument("need 0 < min_duration <= max_duration");
  }
  if (!(rater_noise_sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (!(mean_raters >= 1.0)) throw std::invalid_argument("mean_raters must be >= 1");
  if (!(severity_alpha > 0.0 && severity_beta > 0.0)) {
    throw std::invalid_argument("severity beta parameters must be positive");
  }
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be positive");
  if (systems_per_locale < 1) throw std::invalid_argument("need at least one system");
  if (!(start < end)) throw std::invalid_argument("timestamp range is empty");
}

Waveform RenderCarrier(const CarrierPlan& plan, double prosody_scale) {
  Waveform w;
  w.sample_rate = plan.sample_rate;
  w.samples.assign(plan.num_samples, 0.0);
  const double sr = plan.sample_rate;
  const double total_s = plan.num_samples / sr;
  const double depth = plan.prosody_depth * prosody_scale;
  const double decl = plan.declination * prosody_scale;
  const int fade = static_cast<int>(0.01 * sr);
  double theta = 0.0;
  std::vector<double> amps;
  for (int i = 0; i < plan.num_samples; ++i) {
    const double t = i / sr;
    const double contour = 0.6 * std::sin(kTwoPi * plan.slow_rate_hz * t + plan.slow_phase) +
                           0.4 * std::sin(kTwoPi * plan.fast_rate_hz * t + plan.fast_phase);
    const double f0 = plan.base_pitch_hz *
                      (1.0 + depth * contour - decl * t / std::max(total_s, 1e-9));
    if (i % kAmplitudeUpdate == 0) {
      const int harmonics = std::max(1, static_cast<int>(kMaxHarmonicHz / f0));
      amps.resize(harmonics);
      for (int k = 1; k <= harmonics; ++k) {
        amps[k - 1] = FormantResponse(k * f0, plan.formants_hz) / std::pow(k, 0.7);
      }
    }
    theta += kTwoPi * f0 / sr;
    if (theta > kTwoPi) theta -= kTwoPi;
    const std::complex<double> z(std::cos(theta), std::sin(theta));
    std::complex<double> zk = z;
    double v = 0.0;
    for (size_t k = 0; k < amps.size(); ++k) {
      v += amps[k] * zk.imag();
      zk *= z;
    }
    const double env =
        0.2 + 0.8 * (0.5 - 0.5 * std::cos(kTwoPi * plan.syllable_rate_hz * t + plan.envelope_phase));
    double ramp = 1.0;
    if (i < fade) ramp = static_cast<double>(i) / fade;
    if (plan.num_samples - 1 - i < fade) ramp = std::min(ramp, static_cast<double>(plan.num_samples - 1 - i) / fade);
    w.samples[i] = v * env * ramp;
  }
  double peak = 0.0;
  for (double v : w.samples) peak = std::max(peak, std::fabs(v));
  if (peak > 0.0) {
    for (double& v : w.samples) v *= kPeakLevel / peak;
  }
  return w;
}

CleanUtterance GenClean(const SynthLocaleSpec& spec, double duration_s, int sample_rate,
                        Rng& rng) {
  spec.Validate();
  if (!(duration_s > 0.0)) throw std::invalid_argument("duration must be positive");
  CleanUtterance u;
  CarrierPlan& p = u.plan;
  p.sample_rate = sample_rate;
  p.num_samples = static_cast<int>(std::lround(duration_s * sample_rate));
  p.base_pitch_hz = spec.base_pitch_hz * rng.Uniform(0.95, 1.05);
  p.formants_hz = spec.formants_hz;
  p.syllable_rate_hz = spec.syllable_rate_hz * rng.Uniform(0.9, 1.1);
  p.prosody_depth = rng.Uniform(0.10, 0.16);
  p.slow_rate_hz = rng.Uniform(0.3, 0.8);
  p.slow_phase = rng.Uniform(0.0, kTwoPi);
  p.fast_rate_hz = rng.Uniform(1.5, 3.0);
  p.fast_phase = rng.Uniform(0.0, kTwoPi);
  p.declination = rng.Uniform(0.05, 0.12);
  p.envelope_phase = rng.Uniform(0.0, kTwoPi);
  u.wave = RenderCarrier(p, 1.0);
  return u;
}

Waveform Degrade(const CleanUtterance& clean, const AxisWeights& axes, double severity,
                 Rng& rng) {
  if (!(severity >= 0.0 && severity <= 1.0)) {
    throw std::invalid_argument("severity must lie in [0, 1]");
  }
  if (severity == 0.0) return clean.wave;
  const double prosody = AxisIntensity(axes, ArtifactAxis::kFlatProsody, severity);
  Waveform out = prosody > 0.0 ? RenderCarrier(clean.plan, 1.0 - prosody) : clean.wave;
  Robotize(out.samples, AxisIntensity(axes, ArtifactAxis::kRobotize, severity));
  const double noise = AxisIntensity(axes, ArtifactAxis::kAdditiveNoise, severity);
  if (noise > 0.0) AddNoise(out.samples, noise, rng);
  InsertGaps(out.samples, AxisIntensity(axes, ArtifactAxis::kDiscontinuity, severity),
             out.sample_rate, rng);
  for (double& v : out.samples) v = std::clamp(v, -1.0, 1.0);
  return out;
}

std::vector<double> Rate(double severity, double sigma, int raters, Rng& rng) {
  if (!(severity >= 0.0 && severity <= 1.0)) {
    throw std::invalid_argument("severity must lie in [0, 1]");
  }
  std::vector<double> out;
  for (int i = 0; i < raters; ++i) {
    const double noise = sigma > 0.0 ? sigma * rng.Normal() : 0.0;
    const double v = std::clamp(5.0 - 4.0 * severity + noise, 1.0, 5.0);
    out.push_back(std::round(v * 2.0) / 2.0);
  }
  return out;
}

GeneratedDataset GenDataset(const SynthConfig& cfg, const std::filesystem::path& out_dir,
                            int workers) {
  cfg.Validate();
  std::filesystem::create_directories(out_dir / "wav");
  struct Job {
    size_t locale;
    int index;
  };
  std::vector<Job> jobs;
  for (size_t li = 0; li < cfg.locales.size(); ++li) {
    for (int ui = 0; ui < cfg.locales[li].num_utterances; ++ui) jobs.push_back({li, ui});
  }
  std::vector<RatingRecord> records(jobs.size());
  std::vector<double> severities(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t j = next++; j < jobs.size(); j = next++) {
      try {
        const SynthLocaleSpec& spec = cfg.locales[jobs[j].locale];
        Rng rng(DeriveSeed(cfg.seed, jobs[j].locale + 1, static_cast<uint64_t>(jobs[j].index)));
        const double duration = rng.Uniform(cfg.min_duration_s, cfg.max_duration_s);
        const double severity = Beta(cfg.severity_alpha, cfg.severity_beta, rng);
        const double span = static_cast<double>(cfg.end.micros - cfg.start.micros);
        int64_t micros = cfg.start.micros + static_cast<int64_t>(rng.Uniform() * span);
        micros -= micros % 1000000;
        const int raters = 1 + static_cast<int>(rng.Poisson(cfg.mean_raters - 1.0));
        RatingRecord r;
        char id[64];
        std::snprintf(id, sizeof(id), "%s-%05d", spec.locale.c_str(), jobs[j].index);
        r.utterance_id = id;
        r.audio_path = "wav/" + r.utterance_id + ".wav";
        r.locale = NormalizeLocale(spec.locale);
        r.ratings = Rate(severity, cfg.rater_noise_sigma, raters, rng);
        const int system = std::min(cfg.systems_per_locale - 1,
                                    static_cast<int>(severity * cfg.systems_per_locale));
        r.system_id = "sys-" + r.locale + "-" + std::to_string(system);
        r.project_id = "proj-" + r.locale;
        r.timestamp = Timestamp{micros};
        const CleanUtterance clean = GenClean(spec, duration, cfg.sample_rate, rng);
        const Waveform audio = Degrade(clean, spec.axes, severity, rng);
        WriteWav(audio, out_dir / r.audio_path);
        records[j] = std::move(r);
        severities[j] = severity;
      } catch (const std::exception& e) {
        errors[j] = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (!e.empty()) throw std::runtime_error("synthesis failed: " + e);
  }

  GeneratedDataset out;
  out.dir = out_dir;
  CsvTable sidecar;
  sidecar.header = {"utterance_id", "severity"};
  for (size_t j = 0; j < records.size(); ++j) {
    out.severity[records[j].utterance_id] = severities[j];
    sidecar.rows.push_back({records[j].utterance_id, FormatDouble(severities[j])});
  }
  out.manifest = Manifest(std::move(records));
  out.manifest.set_base_dir(out_dir);
  WriteManifest(out.manifest, out_dir / "manifest.jsonl");
  WriteCsv(sidecar, out_dir / "severity.csv");
  return out;
}

SynthConfig BenchmarkConfig(int num_locales, int largest_count, uint64_t seed) {
  static const char* kTags[] = {"en-US", "en-GB", "es-ES", "fr-FR", "de-DE", "ja-JP",
                                "hi-IN", "sw-KE", "pt-BR", "it-IT", "ko-KR", "ar-EG"};
  constexpr int kMaxLocales = static_cast<int>(std::size(kTags));
  if (num_locales < 1 || num_locales > kMaxLocales) {
    throw std::invalid_argument("benchmark supports 1.." + std::to_string(kMaxLocales) +
                                " locales");
  }
  SynthConfig cfg;
  cfg.seed = seed;
  Rng rng(DeriveSeed(seed, 0x5eed));
  for (int i = 0; i < num_locales; ++i) {
    SynthLocaleSpec s;
    s.locale = kTags[i];
    s.base_pitch_hz = 100.0 + 140.0 * i / std::max(1, num_locales - 1) + rng.Uniform(-5.0, 5.0);
    s.formants_hz = {rng.Uniform(450.0, 850.0), rng.Uniform(1000.0, 2200.0),
                     rng.Uniform(2300.0, 3200.0)};
    s.syllable_rate_hz = rng.Uniform(3.0, 6.0);
    double total = 0.0;
    std::vector<double> w(4);
    for (double& v : w) {
      v = rng.Uniform(0.5, 1.5);
      total += v;
    }
    s.axes = {{ArtifactAxis::kAdditiveNoise, w[0] / total},
              {ArtifactAxis::kDiscontinuity, w[1] / total},
              {ArtifactAxis::kFlatProsody, w[2] / total},
              {ArtifactAxis::kRobotize, w[3] / total}};
    // Roughly geometric sizes, like a head-heavy locale distribution.
    s.num_utterances = std::max(4, static_cast<int>(std::lround(largest_count * std::pow(0.7, i))));
    cfg.locales.push_back(s);
  }
  return cfg;
}

}  // namespace mospred
