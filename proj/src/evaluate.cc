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

#include "mospred/evaluate.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "mospred/csv.h"
#include "mospred/rng.h"
#include "mospred/stats.h"

namespace mospred {

namespace {

uint64_t HashString(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct LocaleRows {
  std::vector<double> targets;
  std::vector<double> predictions;
};

std::map<std::string, LocaleRows> GroupByLocale(const std::vector<PredictionRow>& rows) {
  std::map<std::string, LocaleRows> out;
  for (const auto& r : rows) {
    out[r.locale].targets.push_back(r.target);
    out[r.locale].predictions.push_back(r.prediction);
  }
  return out;
}

double TauOn(const std::vector<double>& a, const std::vector<double>& b,
             std::span<const size_t> idx) {
  std::vector<double> x(idx.size()), y(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) {
    x[i] = a[idx[i]];
    y[i] = b[idx[i]];
  }
  return KendallTauB(x, y);
}

}  // namespace

std::string SplitName(SplitKind kind) {
  return kind == SplitKind::kFineTuned ? "fine_tuned" : "zero_shot";
}

SplitKind ParseSplitName(const std::string& name) {
  if (name == "fine_tuned") return SplitKind::kFineTuned;
  if (name == "zero_shot") return SplitKind::kZeroShot;
  throw std::invalid_argument("unknown split '" + name + "'");
}

const LocaleReport* EvalReport::Find(const std::string& locale) const {
  for (const auto& l : locales) {
    if (l.locale == locale) return &l;
  }
  return nullptr;
}

std::vector<PredictionRow> PredictAll(const ModelParameters& params,
                                      const Manifest& test, const FeatureBank& features) {
  std::vector<PredictionRow> rows;
  rows.reserve(test.size());
  for (const auto& r : test.records()) {
    const Prediction p = Predict(params, features.at(r.utterance_id), r.locale);
    rows.push_back({r.utterance_id, r.locale, AggregateTarget(r), p.y_hat});
  }
  return rows;
}

void RecomputeAggregates(EvalReport& report) {
  report.fine_tuned = {};
  report.zero_shot = {};
  report.all = {};
  report.skipped = 0;
  double sum_ft = 0.0, sum_zs = 0.0, sum_all = 0.0;
  for (const auto& l : report.locales) {
    if (l.skipped) {
      ++report.skipped;
      continue;
    }
    if (l.split == SplitKind::kFineTuned) {
      sum_ft += l.tau;
      ++report.fine_tuned.locales;
    } else {
      sum_zs += l.tau;
      ++report.zero_shot.locales;
    }
    sum_all += l.tau;
    ++report.all.locales;
  }
  auto mean = [](double sum, int n) { return n > 0 ? sum / n : NAN; };
  report.fine_tuned.mean = mean(sum_ft, report.fine_tuned.locales);
  report.zero_shot.mean = mean(sum_zs, report.zero_shot.locales);
  report.all.mean = mean(sum_all, report.all.locales);
}

EvalReport BuildReport(const std::vector<PredictionRow>& rows,
                       const LocaleSet& fine_tuned, const ReportOptions& options) {
  EvalReport report;
  for (const auto& [locale, group] : GroupByLocale(rows)) {
    LocaleReport l;
    l.locale = locale;
    l.n = group.targets.size();
    l.split = fine_tuned.count(locale) ? SplitKind::kFineTuned : SplitKind::kZeroShot;
    if (l.n < 2) {
      l.skipped = true;
      l.skip_reason = "fewer than two utterances";
    } else {
      try {
        l.tau = KendallTauB(group.predictions, group.targets);
        const Interval ci = BootstrapCi(
            l.n,
            [&](std::span<const size_t> idx) {
              return TauOn(group.predictions, group.targets, idx);
            },
            options.bootstrap_resamples, options.level,
            DeriveSeed(options.seed, HashString(locale)));
        // The percentile interval can exclude the point estimate on skewed
        // resampling distributions; report it widened to contain tau.
        l.ci_low = std::min(ci.low, l.tau);
        l.ci_high = std::max(ci.high, l.tau);
      } catch (const DegenerateError& e) {
        l.skipped = true;
        l.skip_reason = e.what();
      }
    }
    report.locales.push_back(l);
  }
  RecomputeAggregates(report);
  return report;
}

Evaluation Evaluate(const ModelParameters& params, const Manifest& test,
                    const FeatureBank& features, const ReportOptions& options) {
  if (test.empty()) throw std::invalid_argument("empty test manifest");
  Evaluation out;
  out.predictions = PredictAll(params, test, features);
  LocaleSet fine_tuned;
  for (const auto& tag : params.vocab.tags()) {
    if (tag != kAnyLocale) fine_tuned.insert(tag);
  }
  out.report = BuildReport(out.predictions, fine_tuned, options);
  return out;
}

Evaluation ReplicateAverage(const std::vector<Evaluation>& runs,
                            const ReportOptions& options) {
  if (runs.empty()) throw std::invalid_argument("no replicas to average");
  const Evaluation& first = runs.front();
  for (const auto& run : runs) {
    if (run.report.locales.size() != first.report.locales.size()) {
      throw std::invalid_argument("replicas report different locale sets");
    }
    for (size_t i = 0; i < first.report.locales.size(); ++i) {
      if (run.report.locales[i].locale != first.report.locales[i].locale) {
        throw std::invalid_argument("replicas report different locale sets");
      }
    }
    if (run.predictions.size() != first.predictions.size()) {
      throw std::invalid_argument("replicas were evaluated on different utterances");
    }
    for (size_t i = 0; i < first.predictions.size(); ++i) {
      if (run.predictions[i].utterance_id != first.predictions[i].utterance_id) {
        throw std::invalid_argument("replicas were evaluated on different utterances");
      }
    }
  }

  Evaluation out;
  out.report = first.report;
  // Prediction columns are averaged for reference; the report itself
  // averages taus, not predictions.
  out.predictions = first.predictions;
  for (size_t i = 0; i < out.predictions.size(); ++i) {
    double sum = 0.0;
    for (const auto& run : runs) sum += run.predictions[i].prediction;
    out.predictions[i].prediction = sum / static_cast<double>(runs.size());
  }

  std::map<std::string, std::vector<size_t>> rows_by_locale;
  for (size_t i = 0; i < first.predictions.size(); ++i) {
    rows_by_locale[first.predictions[i].locale].push_back(i);
  }
  for (size_t li = 0; li < out.report.locales.size(); ++li) {
    LocaleReport& l = out.report.locales[li];
    bool skipped = false;
    double sum = 0.0;
    for (const auto& run : runs) {
      const LocaleReport& r = run.report.locales[li];
      if (r.skipped) {
        skipped = true;
        l.skip_reason = r.skip_reason;
      }
      sum += r.tau;
    }
    l.skipped = skipped;
    if (skipped) continue;
    l.skip_reason.clear();
    l.tau = sum / static_cast<double>(runs.size());
    const std::vector<size_t>& rows = rows_by_locale[l.locale];
    std::vector<double> targets(rows.size());
    std::vector<std::vector<double>> preds(runs.size(), std::vector<double>(rows.size()));
    for (size_t k = 0; k < rows.size(); ++k) {
      targets[k] = first.predictions[rows[k]].target;
      for (size_t r = 0; r < runs.size(); ++r) {
        preds[r][k] = runs[r].predictions[rows[k]].prediction;
      }
    }
    try {
      const Interval ci = BootstrapCi(
          rows.size(),
          [&](std::span<const size_t> idx) {
            double acc = 0.0;
            for (const auto& p : preds) acc += TauOn(p, targets, idx);
            return acc / static_cast<double>(preds.size());
          },
          options.bootstrap_resamples, options.level,
          DeriveSeed(options.seed, HashString(l.locale)));
      l.ci_low = std::min(ci.low, l.tau);
      l.ci_high = std::max(ci.high, l.tau);
    } catch (const DegenerateError&) {
      l.ci_low = l.ci_high = l.tau;
    }
  }
  RecomputeAggregates(out.report);
  return out;
}

void WriteReportCsv(const EvalReport& report, const std::filesystem::path& path) {
  CsvTable t;
  t.header = {"locale", "n", "tau", "ci_low", "ci_high", "split", "status"};
  for (const auto& l : report.locales) {
    if (l.skipped) {
      t.rows.push_back({l.locale, std::to_string(l.n), "", "", "", SplitName(l.split),
                        "skipped: " + l.skip_reason});
    } else {
      t.rows.push_back({l.locale, std::to_string(l.n), FormatDouble(l.tau),
                        FormatDouble(l.ci_low), FormatDouble(l.ci_high),
                        SplitName(l.split), "ok"});
    }
  }
  auto aggregate = [&](const Aggregate& a, const char* split) {
    t.rows.push_back({"ALL", std::to_string(a.locales), FormatDouble(a.mean), "", "",
                      split, "aggregate"});
  };
  aggregate(report.fine_tuned, "fine_tuned");
  aggregate(report.zero_shot, "zero_shot");
  aggregate(report.all, "all");
  WriteCsv(t, path);
}

EvalReport ReadReportCsv(const std::filesystem::path& path) {
  const CsvTable t = ReadCsv(path);
  const size_t c_locale = t.Column("locale"), c_n = t.Column("n"),
               c_tau = t.Column("tau"), c_lo = t.Column("ci_low"),
               c_hi = t.Column("ci_high"), c_split = t.Column("split"),
               c_status = t.Column("status");
  EvalReport report;
  for (const auto& row : t.rows) {
    if (row[c_status] == "aggregate") continue;
    LocaleReport l;
    l.locale = row[c_locale];
    l.n = static_cast<size_t>(std::stoull(row[c_n]));
    l.split = ParseSplitName(row[c_split]);
    if (row[c_status] == "ok") {
      l.tau = ParseDouble(row[c_tau]);
      l.ci_low = ParseDouble(row[c_lo]);
      l.ci_high = ParseDouble(row[c_hi]);
    } else {
      l.skipped = true;
      const std::string& s = row[c_status];
      l.skip_reason = s.rfind("skipped: ", 0) == 0 ? s.substr(9) : s;
    }
    report.locales.push_back(l);
  }
  RecomputeAggregates(report);
  return report;
}

void WritePredictionsCsv(const std::vector<PredictionRow>& rows,
                         const std::filesystem::path& path) {
  CsvTable t;
  t.header = {"utterance_id", "locale", "target", "prediction"};
  for (const auto& r : rows) {
    t.rows.push_back({r.utterance_id, r.locale, FormatDouble(r.target),
                      FormatDouble(r.prediction)});
  }
  WriteCsv(t, path);
}

std::vector<PredictionRow> ReadPredictionsCsv(const std::filesystem::path& path) {
  const CsvTable t = ReadCsv(path);
  const size_t c_id = t.Column("utterance_id"), c_locale = t.Column("locale"),
               c_target = t.Column("target"), c_pred = t.Column("prediction");
  std::vector<PredictionRow> rows;
  for (const auto& row : t.rows) {
    rows.push_back({row[c_id], row[c_locale], ParseDouble(row[c_target]),
                    ParseDouble(row[c_pred])});
  }
  return rows;
}

}  // namespace mospred
