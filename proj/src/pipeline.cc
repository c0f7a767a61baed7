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

#include "mospred/pipeline.h"

#include <cmath>
#include <stdexcept>

#include "mospred/stats.h"

namespace mospred {

PreparedData PrepareData(const std::filesystem::path& manifest_path,
                         const ExperimentSettings& settings) {
  return PrepareData(LoadManifest(manifest_path), settings);
}

PreparedData PrepareData(Manifest manifest, const ExperimentSettings& settings) {
  PreparedData data;
  data.split = MakeSplit(manifest, settings.split);
  data.features =
      BuildFeatureBank(manifest, settings.frontend, settings.feature_cache, settings.workers);
  data.manifest = std::move(manifest);
  return data;
}

TrainedModel TrainOnLocales(const PreparedData& data, const LocaleSet& locales,
                            const ExperimentSettings& settings, uint64_t seed,
                            const ModelParameters* warm_start) {
  if (locales.empty()) throw std::invalid_argument("no training locales");
  const Manifest train = data.split.train.RestrictToLocales(locales);
  const Manifest dev = data.split.dev.RestrictToLocales(locales);
  if (train.empty()) throw std::invalid_argument("no training records for the requested locales");
  if (dev.empty()) throw std::invalid_argument("no dev records for the requested locales");
  TrainingData td{&train, &dev, &data.features};
  TrainedModel out;
  out.result = Train(settings.train, settings.model, td, settings.sampler, warm_start, seed);
  const Snapshot& best = SelectBest(out.result.snapshots);
  out.best = best.params;
  out.best_step = best.step;
  out.best_dev_score = best.dev_score;
  return out;
}

double EvaluateLocale(const ModelParameters& params, const PreparedData& data,
                      const std::string& locale) {
  const Manifest test = data.split.test.RestrictToLocales({locale});
  if (test.size() < 2) {
    throw std::invalid_argument("locale '" + locale + "' has fewer than two test records");
  }
  std::vector<double> pred, target;
  for (const PredictionRow& row : PredictAll(params, test, data.features)) {
    pred.push_back(row.prediction);
    target.push_back(row.target);
  }
  return KendallTauB(pred, target);
}

double MeanTau(const EvalReport& report, const LocaleSet& locales) {
  double sum = 0.0;
  int count = 0;
  for (const auto& tag : locales) {
    const LocaleReport* l = report.Find(tag);
    if (l == nullptr || l->skipped) continue;
    sum += l->tau;
    ++count;
  }
  return count > 0 ? sum / count : NAN;
}

}  // namespace mospred
