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

#ifndef MOSPRED_TRAINER_H_
#define MOSPRED_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mospred/features.h"
#include "mospred/manifest.h"
#include "mospred/model.h"
#include "mospred/sampler.h"

namespace mospred {

struct TrainConfig {
  double learning_rate = 1e-5;
  int batch_size = 32;
  int total_steps = 5000;
  int warmup_steps = 1500;
  int snapshot_every = 500;
  int replicas = 3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 1.0;  // global gradient norm; <= 0 disables clipping

  // "squid-default" (100k steps, batch 32, lr 1e-5, 1500 warmup, snapshot
  // every 10k), "voicemos" (batch 8, 10k steps) and "desk-tiny".
  static TrainConfig Preset(const std::string& name);
  void Validate() const;
};

// Linear ramp from 0 to learning_rate over warmup_steps, then constant.
double LrSchedule(int64_t step, const TrainConfig& cfg);

class NonFiniteGradientError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamState {
  int64_t step = 0;
  std::vector<double> m;
  std::vector<double> v;
};

// One bias-corrected Adam update. Increments state.step first and uses
// LrSchedule(state.step). Zero gradients leave parameters untouched.
template <typename T>
void AdamStep(AdamState& state, std::span<T> params, std::span<const T> grads,
              const TrainConfig& cfg);

// Scales `grads` in place so that their global L2 norm is at most max_norm.
// Returns the norm before clipping.
double ClipGlobalNorm(std::span<float> grads, double max_norm);

struct Snapshot {
  int step = 0;
  ModelParameters params;
  double dev_score = 0.0;  // NaN when undefined
};

struct MetricsRow {
  int step = 0;
  double train_loss = 0.0;
  double lr = 0.0;
  std::optional<double> dev_score;
};

struct TrainingData {
  const Manifest* train = nullptr;
  const Manifest* dev = nullptr;
  const FeatureBank* features = nullptr;
};

struct TrainResult {
  std::vector<Snapshot> snapshots;
  std::vector<MetricsRow> metrics;
};

using StepCallback = std::function<void(const MetricsRow&)>;

// Unweighted mean over dev locales of segment-level tau-b. Locales with
// fewer than two utterances or tied values are left out; when none
// qualifies, the tau over all dev utterances pooled is used instead, and NaN
// when that is undefined too.
double DevScore(const ModelParameters& params, const Manifest& dev,
                const FeatureBank& features);

// Fine-tunes from random initialization (or from `warm_start`, keeping its
// config and vocabulary but restarting the step counter), snapshotting and
// dev-scoring every snapshot_every steps. Deterministic given the seed.
TrainResult Train(const TrainConfig& cfg, const ModelConfig& model_cfg,
                  const TrainingData& data, const SamplerConfig& sampler_cfg,
                  const ModelParameters* warm_start, uint64_t seed,
                  const StepCallback& on_step = nullptr);

// Highest dev score, earliest step on ties; NaN scores rank lowest.
size_t SelectBestIndex(std::span<const double> dev_scores);
const Snapshot& SelectBest(const std::vector<Snapshot>& snapshots);

// step,train_loss,lr,dev_score (empty between snapshots).
void WriteMetricsCsv(const std::vector<MetricsRow>& rows,
                     const std::filesystem::path& path);

}  // namespace mospred

#endif  // MOSPRED_TRAINER_H_
