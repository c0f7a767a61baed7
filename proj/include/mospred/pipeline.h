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

#ifndef MOSPRED_PIPELINE_H_
#define MOSPRED_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mospred/dsp.h"
#include "mospred/evaluate.h"
#include "mospred/features.h"
#include "mospred/manifest.h"
#include "mospred/model.h"
#include "mospred/sampler.h"
#include "mospred/trainer.h"

namespace mospred {

struct ExperimentSettings {
  FrontendConfig frontend;
  SplitSpec split;
  ModelConfig model = ModelConfig::Preset("tiny");
  TrainConfig train = TrainConfig::Preset("desk-tiny");
  SamplerConfig sampler;
  ReportOptions report;
  int workers = 1;
  std::optional<std::filesystem::path> feature_cache;
};

struct PreparedData {
  Manifest manifest;
  SplitResult split;
  FeatureBank features;
};

PreparedData PrepareData(const std::filesystem::path& manifest_path,
                         const ExperimentSettings& settings);
PreparedData PrepareData(Manifest manifest, const ExperimentSettings& settings);

struct TrainedModel {
  ModelParameters best;
  int best_step = 0;
  double best_dev_score = 0.0;
  TrainResult result;
};

// Fine-tunes on the train/dev records of `locales` only.
TrainedModel TrainOnLocales(const PreparedData& data, const LocaleSet& locales,
                            const ExperimentSettings& settings, uint64_t seed,
                            const ModelParameters* warm_start = nullptr);

// Tau on the test records of one locale. Throws when the locale has fewer
// than two test records or its tau is undefined.
double EvaluateLocale(const ModelParameters& params, const PreparedData& data,
                      const std::string& locale);

// Mean tau over the non-skipped report entries of `locales`; NaN if none.
double MeanTau(const EvalReport& report, const LocaleSet& locales);

}  // namespace mospred

#endif  // MOSPRED_PIPELINE_H_
