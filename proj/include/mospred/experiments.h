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

#ifndef MOSPRED_EXPERIMENTS_H_
#define MOSPRED_EXPERIMENTS_H_

#include <atomic>
#include <mutex>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "mospred/evaluate.h"
#include "mospred/manifest.h"

namespace mospred {

// Runs fn(0) ... fn(n - 1) on up to `workers` threads. Callers write results
// into index-addressed slots, so output never depends on scheduling.
void ParallelFor(size_t n, int workers, const std::function<void(size_t)>& fn);

// Rows are fine-tuning locales, columns are test locales.
struct TransferMatrix {
  std::vector<std::string> locales;
  std::vector<std::vector<std::optional<double>>> tau;
  std::vector<std::vector<std::string>> errors;

  double MeanOffDiagonal() const;  // NaN when no off-diagonal cell is present
  double MeanDiagonal() const;
};

template <typename Model>
TransferMatrix RunTransferMatrix(
    const std::vector<std::string>& locales,
    const std::function<Model(const std::string& train_locale)>& train_fn,
    const std::function<double(const Model&, const std::string& test_locale)>& eval_fn,
    int workers = 1) {
  if (locales.size() < 2) throw std::invalid_argument("transfer matrix needs >= 2 locales");
  const size_t n = locales.size();
  TransferMatrix m;
  m.locales = locales;
  m.tau.assign(n, std::vector<std::optional<double>>(n));
  m.errors.assign(n, std::vector<std::string>(n));
  ParallelFor(n, workers, [&](size_t i) {
    std::optional<Model> model;
    try {
      model.emplace(train_fn(locales[i]));
    } catch (const std::exception& e) {
      for (size_t j = 0; j < n; ++j) m.errors[i][j] = std::string("train: ") + e.what();
      return;
    }
    for (size_t j = 0; j < n; ++j) {
      try {
        m.tau[i][j] = eval_fn(*model, locales[j]);
      } catch (const std::exception& e) {
        m.errors[i][j] = std::string("eval: ") + e.what();
      }
    }
  });
  return m;
}

struct TrainingSet {
  std::string label;
  LocaleSet locales;
};

struct GrowthPoint {
  std::string target;
  std::string label;
  size_t set_size = 0;
  std::optional<double> score;
  std::string error;
};

// One model per training set, each evaluated on every target locale.
template <typename Model>
std::vector<GrowthPoint> RunSubsetGrowth(
    const std::vector<std::string>& targets, const std::vector<TrainingSet>& sets,
    const std::function<Model(const LocaleSet&)>& train_fn,
    const std::function<double(const Model&, const std::string& target)>& eval_fn,
    int workers = 1) {
  for (const auto& s : sets) {
    if (s.locales.empty()) throw std::invalid_argument("empty training set '" + s.label + "'");
  }
  std::vector<GrowthPoint> points(targets.size() * sets.size());
  ParallelFor(sets.size(), workers, [&](size_t k) {
    std::optional<Model> model;
    std::string train_error;
    try {
      model.emplace(train_fn(sets[k].locales));
    } catch (const std::exception& e) {
      train_error = std::string("train: ") + e.what();
    }
    for (size_t t = 0; t < targets.size(); ++t) {
      GrowthPoint& p = points[t * sets.size() + k];
      p.target = targets[t];
      p.label = sets[k].label;
      p.set_size = sets[k].locales.size();
      if (!model) {
        p.error = train_error;
        continue;
      }
      try {
        p.score = eval_fn(*model, targets[t]);
      } catch (const std::exception& e) {
        p.error = std::string("eval: ") + e.what();
      }
    }
  });
  return points;
}

struct SweepRow {
  double temperature = 1.0;
  std::string aggregate;  // "fine_tuned" or "zero_shot"
  uint64_t seed = 0;
  std::optional<double> score;
  std::string error;
};

using SweepCell = std::function<std::map<std::string, double>(double temperature,
                                                              uint64_t seed)>;

// One run per (temperature, seed); the same seeds are reused across
// temperatures.
std::vector<SweepRow> RunTemperatureSweep(const std::vector<double>& temperatures,
                                          const std::vector<uint64_t>& seeds,
                                          const SweepCell& cell, int workers = 1);

struct SweepSummary {
  double temperature = 1.0;
  std::string aggregate;
  double mean = 0.0;
  double variance = 0.0;  // unbiased, across seeds; 0 with one seed
  int runs = 0;
};
std::vector<SweepSummary> SummarizeSweep(const std::vector<SweepRow>& rows);

struct CorrelationPoint {
  std::string locale;
  double log_count = 0.0;
  double score = 0.0;
};

struct CorrelationSummary {
  std::vector<CorrelationPoint> points;
  double pearson = 0.0;
};

// Pearson correlation between ln(record count) and tau over locales present
// in both the report (non-skipped) and `counts`.
CorrelationSummary DataVsPerf(const EvalReport& report,
                              const std::map<std::string, size_t>& counts);

void WriteMatrixCsv(const TransferMatrix& m, const std::filesystem::path& path);
TransferMatrix ReadMatrixCsv(const std::filesystem::path& path);
void WriteGrowthCsv(const std::vector<GrowthPoint>& points, const std::filesystem::path& path);
// tau_temperature,aggregate,score with the score averaged across seeds.
void WriteSweepCsv(const std::vector<SweepSummary>& summary, const std::filesystem::path& path);
void WriteSweepRunsCsv(const std::vector<SweepRow>& rows, const std::filesystem::path& path);
void WriteCorrelationCsv(const CorrelationSummary& c, const std::filesystem::path& path);

}  // namespace mospred

#endif  // MOSPRED_EXPERIMENTS_H_
