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

#ifndef MOSPRED_EVALUATE_H_
#define MOSPRED_EVALUATE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mospred/features.h"
#include "mospred/manifest.h"
#include "mospred/model.h"

namespace mospred {

enum class SplitKind { kFineTuned, kZeroShot };
std::string SplitName(SplitKind kind);
SplitKind ParseSplitName(const std::string& name);

struct PredictionRow {
  std::string utterance_id;
  std::string locale;
  double target = 0.0;      // aggregated, rescaled to [0, 1]
  double prediction = 0.0;  // y_hat
};

struct LocaleReport {
  std::string locale;
  size_t n = 0;
  double tau = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  SplitKind split = SplitKind::kFineTuned;
  bool skipped = false;
  std::string skip_reason;
};

struct Aggregate {
  double mean = 0.0;  // NaN when no locale qualifies
  int locales = 0;
};

struct EvalReport {
  std::vector<LocaleReport> locales;  // sorted by locale tag
  Aggregate fine_tuned;
  Aggregate zero_shot;
  Aggregate all;
  int skipped = 0;

  const LocaleReport* Find(const std::string& locale) const;
};

struct ReportOptions {
  int bootstrap_resamples = 1000;
  double level = 0.95;
  uint64_t seed = 0;
};

// Runs the model on every record (unknown locales fall back to ANY-LOC).
std::vector<PredictionRow> PredictAll(const ModelParameters& params,
                                      const Manifest& test, const FeatureBank& features);

// Per-locale tau-b between predictions and targets with percentile bootstrap
// intervals over utterances. Locales with fewer than two utterances or with
// all-tied predictions or targets are listed as skipped. Aggregates are
// unweighted means over the non-skipped locales.
EvalReport BuildReport(const std::vector<PredictionRow>& rows,
                       const LocaleSet& fine_tuned, const ReportOptions& options);

// Recomputes aggregate means and the skipped count from per-locale rows.
void RecomputeAggregates(EvalReport& report);

struct Evaluation {
  EvalReport report;
  std::vector<PredictionRow> predictions;
};

// Locales known to the model vocabulary count as fine-tuned.
Evaluation Evaluate(const ModelParameters& params, const Manifest& test,
                    const FeatureBank& features, const ReportOptions& options);

// Averages per-locale taus across replicas evaluated on the same test set.
// Intervals come from a bootstrap of the replica-mean tau, resampling the
// same utterances for every replica. Throws std::invalid_argument when the
// replicas disagree on locales or utterances.
Evaluation ReplicateAverage(const std::vector<Evaluation>& runs,
                            const ReportOptions& options);

// CSV I/O. The report CSV has one row per locale
// (locale,n,tau,ci_low,ci_high,split,status) followed by aggregate rows whose
// locale column is "ALL" and whose split is fine_tuned, zero_shot or all.
void WriteReportCsv(const EvalReport& report, const std::filesystem::path& path);
EvalReport ReadReportCsv(const std::filesystem::path& path);
void WritePredictionsCsv(const std::vector<PredictionRow>& rows,
                         const std::filesystem::path& path);
std::vector<PredictionRow> ReadPredictionsCsv(const std::filesystem::path& path);

}  // namespace mospred

#endif  // MOSPRED_EVALUATE_H_
