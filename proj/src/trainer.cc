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

#include "mospred/trainer.h"

#include <cmath>
#include <map>
#include <sstream>

#include "mospred/csv.h"
#include "mospred/rng.h"
#include "mospred/stats.h"

namespace mospred {

TrainConfig TrainConfig::Preset(const std::string& name) {
  TrainConfig cfg;
  if (name == "squid-default") {
    cfg.total_steps = 100000;
    cfg.snapshot_every = 10000;
  } else if (name == "voicemos") {
    cfg.batch_size = 8;
    cfg.total_steps = 10000;
    cfg.snapshot_every = 1000;
  } else if (name == "desk-tiny") {
    // A randomly initialized tiny encoder needs a far larger step size than
    // fine-tuning a pre-trained one.
    cfg.learning_rate = 1e-3;
    cfg.warmup_steps = 100;
    cfg.total_steps = 5000;
    cfg.snapshot_every = 500;
  } else {
    throw std::invalid_argument("unknown training preset '" + name + "'");
  }
  return cfg;
}

void TrainConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
  if (total_steps < 1) throw std::invalid_argument("total_steps must be positive");
  if (warmup_steps < 0 || warmup_steps > total_steps) {
    throw std::invalid_argument("need 0 <= warmup_steps <= total_steps");
  }
  if (snapshot_every < 1 || total_steps % snapshot_every != 0) {
    throw std::invalid_argument("snapshot_every must divide total_steps");
  }
  if (replicas < 1) throw std::invalid_argument("replicas must be positive");
}

double LrSchedule(int64_t step, const TrainConfig& cfg) {
  if (step < 0) throw std::invalid_argument("negative step");
  if (cfg.warmup_steps <= 0 || step >= cfg.warmup_steps) return cfg.learning_rate;
  return cfg.learning_rate * static_cast<double>(step) / cfg.warmup_steps;
}

template <typename T>
void AdamStep(AdamState& state, std::span<T> params, std::span<const T> grads,
              const TrainConfig& cfg) {
  if (params.size() != grads.size()) {
    throw std::invalid_argument("gradient and parameter sizes differ");
  }
  for (size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      std::ostringstream os;
      os << "non-finite gradient at parameter " << i << " (step " << state.step + 1
         << ", value " << grads[i] << ")";
      throw NonFiniteGradientError(os.str());
    }
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  ++state.step;
  const double lr = LrSchedule(state.step, cfg);
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    if (state.m[i] == 0.0) continue;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] = static_cast<T>(params[i] - lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon));
  }
}

template void AdamStep<float>(AdamState&, std::span<float>, std::span<const float>,
                              const TrainConfig&);
template void AdamStep<double>(AdamState&, std::span<double>, std::span<const double>,
                               const TrainConfig&);

double ClipGlobalNorm(std::span<float> grads, double max_norm) {
  double sq = 0.0;
  for (float g : grads) sq += static_cast<double>(g) * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const auto scale = static_cast<float>(max_norm / norm);
    for (float& g : grads) g *= scale;
  }
  return norm;
}

double DevScore(const ModelParameters& params, const Manifest& dev,
                const FeatureBank& features) {
  if (dev.empty()) throw std::invalid_argument("empty dev set");
  std::vector<double> all_pred, all_target;
  double sum = 0.0;
  int counted = 0;
  for (const auto& [locale, indices] : dev.locale_index()) {
    std::vector<double> pred, target;
    for (size_t i : indices) {
      const RatingRecord& r = dev[i];
      pred.push_back(Predict(params, features.at(r.utterance_id), r.locale).y_hat);
      target.push_back(AggregateTarget(r));
    }
    all_pred.insert(all_pred.end(), pred.begin(), pred.end());
    all_target.insert(all_target.end(), target.begin(), target.end());
    if (pred.size() < 2) continue;
    try {
      sum += KendallTauB(pred, target);
      ++counted;
    } catch (const DegenerateError&) {
    }
  }
  if (counted > 0) return sum / counted;
  if (all_pred.size() < 2) return NAN;
  try {
    return KendallTauB(all_pred, all_target);
  } catch (const DegenerateError&) {
    return NAN;
  }
}

TrainResult Train(const TrainConfig& cfg, const ModelConfig& model_cfg,
                  const TrainingData& data, const SamplerConfig& sampler_cfg,
                  const ModelParameters* warm_start, uint64_t seed,
                  const StepCallback& on_step) {
  cfg.Validate();
  if (data.train == nullptr || data.dev == nullptr || data.features == nullptr) {
    throw std::invalid_argument("training data is incomplete");
  }
  if (data.train->empty()) throw std::invalid_argument("empty training split");
  if (data.dev->empty()) throw std::invalid_argument("empty dev split");

  ModelParameters params = warm_start != nullptr
                               ? *warm_start
                               : InitParams(model_cfg, LocaleVocab(data.train->Locales()),
                                            DeriveSeed(seed, 0));
  params.version = 0;
  SamplerConfig scfg = sampler_cfg;
  scfg.batch_size = cfg.batch_size;
  scfg.seed = DeriveSeed(seed, 1);
  BatchSampler sampler(*data.train, scfg);

  // Resolve embedding indices once; locales outside the vocabulary (possible
  // with a warm start) share the ANY-LOC row.
  std::map<std::string, int> locale_index;
  for (const auto& tag : params.vocab.tags()) locale_index[tag] = params.vocab.Index(tag);

  TrainResult result;
  AdamState adam;
  ParamVector<float> grads(params.values.size());
  ForwardTrace<float> trace;
  for (int step = 1; step <= cfg.total_steps; ++step) {
    const std::vector<BatchItem> batch = sampler.Next();
    std::fill(grads.begin(), grads.end(), 0.0f);
    double loss = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());
    for (const BatchItem& item : batch) {
      const LogMelSpectrogram& s = data.features->at(item.utterance_id);
      auto it = locale_index.find(item.locale_for_embedding);
      const int li = it != locale_index.end() ? it->second : 0;
      const Prediction p = PredictIndex(params, s, li, &trace);
      const double err = p.y_hat - item.target;
      loss += err * err * inv_batch;
      Backward(params, trace, static_cast<float>(2.0 * err * inv_batch), grads);
    }
    ClipGlobalNorm(grads, cfg.clip_norm);
    AdamStep<float>(adam, params.values, grads, cfg);
    ++params.version;

    MetricsRow row{step, loss, LrSchedule(adam.step, cfg), std::nullopt};
    if (step % cfg.snapshot_every == 0) {
      Snapshot snap;
      snap.step = step;
      snap.params = params;
      snap.dev_score = DevScore(params, *data.dev, *data.features);
      row.dev_score = snap.dev_score;
      result.snapshots.push_back(std::move(snap));
    }
    if (on_step) on_step(row);
    result.metrics.push_back(row);
  }
  return result;
}

size_t SelectBestIndex(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("no snapshots to select from");
  size_t best = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    const bool best_nan = std::isnan(scores[best]);
    if (std::isnan(scores[i])) continue;
    if (best_nan || scores[i] > scores[best]) best = i;
  }
  return best;
}

const Snapshot& SelectBest(const std::vector<Snapshot>& snapshots) {
  std::vector<double> scores;
  for (const auto& s : snapshots) scores.push_back(s.dev_score);
  return snapshots[SelectBestIndex(scores)];
}

void WriteMetricsCsv(const std::vector<MetricsRow>& rows,
                     const std::filesystem::path& path) {
  CsvTable t;
  t.header = {"step", "train_loss", "lr", "dev_score"};
  for (const auto& r : rows) {
    t.rows.push_back({std::to_string(r.step), FormatDouble(r.train_loss),
                      FormatDouble(r.lr),
                      r.dev_score ? FormatDouble(*r.dev_score) : std::string()});
  }
  WriteCsv(t, path);
}

}  // namespace mospred
