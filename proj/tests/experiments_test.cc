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

#include "mospred/experiments.h"

#include <cmath>
#include <set>

#include "doctest.h"
#include "mospred/pipeline.h"
#include "mospred/stats.h"
#include "mospred/synthbench.h"
#include "test_util.h"

namespace mospred {
namespace {

TEST_CASE("parallel for covers every index once and rethrows") {
  std::vector<int> hits(100, 0);
  ParallelFor(hits.size(), 4, [&](size_t i) { ++hits[i]; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(ParallelFor(10, 3,
                              [](size_t i) {
                                if (i == 7) throw std::runtime_error("boom");
                              }),
                  std::runtime_error);
}

TEST_CASE("transfer matrix is oriented row = train, column = test") {
  // Canned taus: model "trained on" locale X scores table[X][Y] on Y.
  const std::map<std::string, std::map<std::string, double>> table = {
      {"en-US", {{"en-US", 0.9}, {"fr-FR", 0.2}}},
      {"fr-FR", {{"en-US", -0.1}, {"fr-FR", 0.7}}}};
  const TransferMatrix m = RunTransferMatrix<std::string>(
      {"en-US", "fr-FR"}, [](const std::string& l) { return l; },
      [&](const std::string& model, const std::string& test) {
        return table.at(model).at(test);
      },
      2);
  CHECK(*m.tau[0][1] == 0.2);
  CHECK(*m.tau[1][0] == -0.1);
  CHECK(m.MeanDiagonal() == doctest::Approx(0.8));
  CHECK(m.MeanOffDiagonal() == doctest::Approx(0.05));

  testing::TempDir dir("matrix");
  WriteMatrixCsv(m, dir / "m.csv");
  CHECK(testing::ReadText(dir / "m.csv").rfind("row_locale,column_locale,tau\nen-US,en-US,", 0) ==
        0);
  const TransferMatrix back = ReadMatrixCsv(dir / "m.csv");
  CHECK(back.locales == m.locales);
  CHECK(*back.tau[1][0] == -0.1);
}

TEST_CASE("transfer matrix records failures per cell") {
  const TransferMatrix m = RunTransferMatrix<int>(
      {"a", "b", "c"},
      [](const std::string& l) {
        if (l == "b") throw std::invalid_argument("no data");
        return 1;
      },
      [](const int&, const std::string& test) {
        if (test == "c") throw std::domain_error("constant");
        return 0.5;
      });
  CHECK(m.tau[0][0].has_value());
  CHECK_FALSE(m.tau[1][0].has_value());
  CHECK(m.errors[1][2] == "train: no data");
  CHECK(m.errors[0][2] == "eval: constant");
  CHECK(m.MeanOffDiagonal() == doctest::Approx(0.5));
  CHECK_THROWS(RunTransferMatrix<int>(
      {"a"}, [](const std::string&) { return 0; },
      [](const int&, const std::string&) { return 0.0; }));
}

TEST_CASE("subset growth trains one model per set") {
  std::atomic<int> trained{0};
  const std::vector<TrainingSet> sets = {{"top:1", {"a"}}, {"a+b", {"a", "b"}}};
  const auto points = RunSubsetGrowth<LocaleSet>(
      {"a", "c"}, sets,
      [&](const LocaleSet& s) {
        ++trained;
        return s;
      },
      [](const LocaleSet& s, const std::string& target) {
        return static_cast<double>(s.size()) + (s.count(target) ? 0.5 : 0.0);
      });
  CHECK(trained == 2);
  REQUIRE(points.size() == 4);
  CHECK(points[0].target == "a");
  CHECK(points[0].label == "top:1");
  CHECK(*points[0].score == 1.5);
  CHECK(*points[1].score == 2.5);
  CHECK(*points[3].score == 2.0);
  CHECK(points[3].set_size == 2);
  CHECK_THROWS(RunSubsetGrowth<int>(
      {"a"}, {{"empty", {}}}, [](const LocaleSet&) { return 0; },
      [](const int&, const std::string&) { return 0.0; }));
}

TEST_CASE("temperature sweep summary") {
  const auto rows = RunTemperatureSweep(
      {1.0, 2.0}, {10, 11, 12},
      [](double t, uint64_t seed) {
        return std::map<std::string, double>{{"fine_tuned", t + 0.1 * (seed - 10)},
                                             {"zero_shot", 0.3}};
      },
      2);
  CHECK(rows.size() == 12);
  const auto summary = SummarizeSweep(rows);
  bool found = false;
  for (const auto& s : summary) {
    if (s.temperature == 2.0 && s.aggregate == "fine_tuned") {
      found = true;
      CHECK(s.mean == doctest::Approx(2.1));
      // Unbiased variance of {2.0, 2.1, 2.2}.
      CHECK(s.variance == doctest::Approx(0.01));
      CHECK(s.runs == 3);
    }
    if (s.aggregate == "zero_shot") CHECK(s.variance == doctest::Approx(0.0));
  }
  CHECK(found);
  CHECK_THROWS(RunTemperatureSweep({0.5}, {1}, [](double, uint64_t) {
    return std::map<std::string, double>{};
  }));
}

EvalReport ReportWith(const std::map<std::string, double>& taus) {
  EvalReport r;
  for (const auto& [l, t] : taus) r.locales.push_back(LocaleReport{.locale = l, .n = 5, .tau = t});
  RecomputeAggregates(r);
  return r;
}

TEST_CASE("data versus performance") {
  SUBCASE("linear in log count") {
    const auto c = DataVsPerf(ReportWith({{"a", 0.1 + 0.05 * std::log(10.0)},
                                          {"b", 0.1 + 0.05 * std::log(200.0)},
                                          {"c", 0.1 + 0.05 * std::log(3000.0)}}),
                              {{"a", 10}, {"b", 200}, {"c", 3000}});
    CHECK(c.pearson == doctest::Approx(1.0));
  }
  SUBCASE("constant taus are degenerate") {
    CHECK_THROWS_AS(DataVsPerf(ReportWith({{"a", 0.3}, {"b", 0.3}, {"c", 0.3}}),
                               {{"a", 10}, {"b", 20}, {"c", 30}}),
                    DegenerateError);
  }
  SUBCASE("hand-computed pairs") {
    const std::vector<std::pair<size_t, double>> pairs = {
        {50, 0.21}, {400, 0.35}, {90, 0.18}, {7000, 0.52}, {1200, 0.30}};
    std::map<std::string, double> taus;
    std::map<std::string, size_t> counts;
    double sx = 0, sy = 0;
    for (size_t i = 0; i < pairs.size(); ++i) {
      const std::string l(1, static_cast<char>('a' + i));
      taus[l] = pairs[i].second;
      counts[l] = pairs[i].first;
      sx += std::log(static_cast<double>(pairs[i].first));
      sy += pairs[i].second;
    }
    sx /= 5;
    sy /= 5;
    double sxy = 0, sxx = 0, syy = 0;
    for (const auto& [n, t] : pairs) {
      const double dx = std::log(static_cast<double>(n)) - sx, dy = t - sy;
      sxy += dx * dy;
      sxx += dx * dx;
      syy += dy * dy;
    }
    const auto c = DataVsPerf(ReportWith(taus), counts);
    CHECK(c.pearson == doctest::Approx(sxy / std::sqrt(sxx * syy)).epsilon(1e-12));
    CHECK(c.points.size() == 5);
  }
  CHECK_THROWS(DataVsPerf(ReportWith({{"a", 0.1}, {"b", 0.2}}), {{"a", 1}, {"b", 2}}));
}

// End-to-end checks on a small generated corpus.
struct Corpus {
  testing::TempDir dir{"corpus"};
  ExperimentSettings settings;
  PreparedData data;

  Corpus() {
    SynthConfig cfg = BenchmarkConfig(3, 40, 11);
    for (auto& l : cfg.locales) l.num_utterances = 40;
    cfg.min_duration_s = 0.4;
    cfg.max_duration_s = 0.5;
    cfg.end = MakeUtc(2021, 12, 31);
    GenDataset(cfg, dir.path(), 2);
    settings.frontend.t_max = 48;
    settings.model.t_max = 48;
    settings.model.encoder = {.subsample_stride = 4, .num_blocks = 1, .d_model = 16,
                              .num_heads = 2, .ffn_mult = 2};
    settings.model.locale_emb_dim = 8;
    settings.split.zero_shot_threshold = 0;
    settings.split.dev_fraction = 0.2;
    settings.train.total_steps = 40;
    settings.train.warmup_steps = 10;
    settings.train.snapshot_every = 20;
    settings.train.batch_size = 8;
    data = PrepareData(dir / "manifest.jsonl", settings);
  }
};

TEST_CASE("matrix diagonal matches a standalone mono-locale run") {
  Corpus c;
  const std::vector<std::string> locales(c.data.split.fine_tuned_locales.begin(),
                                         c.data.split.fine_tuned_locales.end());
  REQUIRE(locales.size() == 3);
  const TransferMatrix m = RunTransferMatrix<ModelParameters>(
      locales,
      [&](const std::string& l) { return TrainOnLocales(c.data, {l}, c.settings, 5).best; },
      [&](const ModelParameters& p, const std::string& l) { return EvaluateLocale(p, c.data, l); },
      2);
  for (size_t i = 0; i < locales.size(); ++i) {
    const TrainedModel solo = TrainOnLocales(c.data, {locales[i]}, c.settings, 5);
    REQUIRE(m.tau[i][i].has_value());
    CHECK(*m.tau[i][i] == EvaluateLocale(solo.best, c.data, locales[i]));
  }

  // A single-set growth run on the target itself reduces to the mono run.
  const auto growth = RunSubsetGrowth<ModelParameters>(
      {locales[0]}, {{"self", {locales[0]}}},
      [&](const LocaleSet& s) { return TrainOnLocales(c.data, s, c.settings, 5).best; },
      [&](const ModelParameters& p, const std::string& l) { return EvaluateLocale(p, c.data, l); });
  CHECK(*growth[0].score == *m.tau[0][0]);
}

TEST_CASE("temperature is irrelevant for single-locale data") {
  Corpus c;
  const std::string locale = *c.data.split.fine_tuned_locales.begin();
  double scores[2];
  int k = 0;
  for (double t : {1.0, 10.0}) {
    ExperimentSettings s = c.settings;
    s.sampler.temperature = t;
    scores[k++] = EvaluateLocale(TrainOnLocales(c.data, {locale}, s, 3).best, c.data, locale);
  }
  CHECK(scores[0] == scores[1]);
}

}  // namespace
}  // namespace mospred
