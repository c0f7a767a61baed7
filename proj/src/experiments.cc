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

#include "mospred/csv.h"
#include "mospred/stats.h"

namespace mospred {

void ParallelFor(size_t n, int workers, const std::function<void(size_t)>& fn) {
  std::atomic<size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const size_t extra = workers > 1 ? std::min<size_t>(workers - 1, n) : 0;
  for (size_t w = 0; w < extra; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double TransferMatrix::MeanOffDiagonal() const {
  double sum = 0.0;
  int count = 0;
  for (size_t i = 0; i < tau.size(); ++i) {
    for (size_t j = 0; j < tau.size(); ++j) {
      if (i != j && tau[i][j]) {
        sum += *tau[i][j];
        ++count;
      }
    }
  }
  return count > 0 ? sum / count : NAN;
}

double TransferMatrix::MeanDiagonal() const {
  double sum = 0.0;
  int count = 0;
  for (size_t i = 0; i < tau.size(); ++i) {
    if (tau[i][i]) {
      sum += *tau[i][i];
      ++count;
    }
  }
  return count > 0 ? sum / count : NAN;
}

std::vector<SweepRow> RunTemperatureSweep(const std::vector<double>& temperatures,
                                          const std::vector<uint64_t>& seeds,
                                          const SweepCell& cell, int workers) {
  for (double t : temperatures) {
    if (!(t >= 1.0)) throw std::invalid_argument("sweep temperatures must be >= 1");
  }
  const size_t cells = temperatures.size() * seeds.size();
  std::vector<std::map<std::string, double>> results(cells);
  std::vector<std::string> errors(cells);
  ParallelFor(cells, workers, [&](size_t k) {
    try {
      results[k] = cell(temperatures[k / seeds.size()], seeds[k % seeds.size()]);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });
  std::vector<SweepRow> rows;
  for (size_t k = 0; k < cells; ++k) {
    for (const char* agg : {"fine_tuned", "zero_shot"}) {
      SweepRow r;
      r.temperature = temperatures[k / seeds.size()];
      r.seed = seeds[k % seeds.size()];
      r.aggregate = agg;
      auto it = results[k].find(agg);
      if (!errors[k].empty()) {
        r.error = errors[k];
      } else if (it != results[k].end() && !std::isnan(it->second)) {
        r.score = it->second;
      } else {
        r.error = "aggregate undefined";
      }
      rows.push_back(r);
    }
  }
  return rows;
}

std::vector<SweepSummary> SummarizeSweep(const std::vector<SweepRow>& rows) {
  std::vector<SweepSummary> out;
  std::map<std::pair<double, std::string>, std::vector<double>> groups;
  std::vector<std::pair<double, std::string>> order;
  for (const auto& r : rows) {
    const auto key = std::make_pair(r.temperature, r.aggregate);
    if (!groups.count(key)) order.push_back(key);
    auto& g = groups[key];
    if (r.score) g.push_back(*r.score);
  }
  for (const auto& key : order) {
    const auto& g = groups[key];
    SweepSummary s;
    s.temperature = key.first;
    s.aggregate = key.second;
    s.runs = static_cast<int>(g.size());
    if (g.empty()) {
      s.mean = NAN;
      s.variance = NAN;
    } else {
      s.mean = Mean(g);
      double ss = 0.0;
      for (double v : g) ss += (v - s.mean) * (v - s.mean);
      s.variance = g.size() > 1 ? ss / static_cast<double>(g.size() - 1) : 0.0;
    }
    out.push_back(s);
  }
  return out;
}

CorrelationSummary DataVsPerf(const EvalReport& report,
                              const std::map<std::string, size_t>& counts) {
  CorrelationSummary out;
  for (const auto& l : report.locales) {
    if (l.skipped) continue;
    auto it = counts.find(l.locale);
    if (it == counts.end() || it->second < 1) continue;
    out.points.push_back({l.locale, std::log(static_cast<double>(it->second)), l.tau});
  }
  if (out.points.size() < 3) {
    throw std::invalid_argument("data-vs-performance needs at least 3 locales");
  }
  std::vector<double> x, y;
  for (const auto& p : out.points) {
    x.push_back(p.log_count);
    y.push_back(p.score);
  }
  out.pearson = Pearson(x, y);
  return out;
}

void WriteMatrixCsv(const TransferMatrix& m, const std::filesystem::path& path) {
  CsvTable t;
  t.header = {"row_locale", "column_locale", "tau"};
  for (size_t i = 0; i < m.locales.size(); ++i) {
    for (size_t j = 0; j < m.locales.size(); ++j) {
      t.rows.push_back({m.locales[i], m.locales[j],
                        m.tau[i][j] ? FormatDouble(*m.tau[i][j]) : std::string()});
    }
  }
  WriteCsv(t, path);
}

TransferMatrix ReadMatrixCsv(const std::filesystem::path& path) {
  const CsvTable t = ReadCsv(path);
  const size_t c_row = t.Column("row_locale"), c_col = t.Column("column_locale"),
               c_tau = t.Column("tau");
  TransferMatrix m;
  std::map<std::string, size_t> index;
  for (const auto& row : t.rows) {
    if (!index.count(row[c_row])) {
      index[row[c_row]] = m.locales.size();
      m.locales.push_back(row[c_row]);
    }
  }
  const size_t n = m.locales.size();
  m.tau.assign(n, std::vector<std::optional<double>>(n));
  m.errors.assign(n, std::vector<std::string>(n));
  for (const auto& row : t.rows) {
    if (!row[c_tau].empty()) {
      m.tau[index.at(row[c_row])][index.at(row[c_col])] = ParseDouble(row[c_tau]);
    }
  }
  return m;
}

void WriteGrowthCsv(const std::vector<GrowthPoint>& points, const std::filesystem::path& path) {
  CsvTable t;
  t.header = {"target", "training_set", "set_size", "tau", "status"};
  for (const auto& p : points) {
    t.rows.push_back({p.target, p.label, std::to_string(p.set_size),
                      p.score ? FormatDouble(*p.score) : std::string(),
                      p.score ? std::string("ok") : "missing: " + p.error});
  }
  WriteCsv(t, path);
}

void WriteSweepCsv(const std::vector<SweepSummary>& summary, const std::filesystem::path& path) {
  CsvTable t;
  t.header = {"tau_temperature", "aggregate", "score", "variance", "runs"};
  for (const auto& s : summary) {
    t.rows.push_back({FormatDouble(s.temperature), s.aggregate, FormatDouble(s.mean),
                      FormatDouble(s.variance), std::to_string(s.runs)});
  }
  WriteCsv(t, path);
}

void WriteSweepRunsCsv(const std::vector<SweepRow>& rows, const std::filesystem::path& path) {
  CsvTable t;
  t.header = {"tau_temperature", "aggregate", "seed", "score", "status"};
  for (const auto& r : rows) {
    t.rows.push_back({FormatDouble(r.temperature), r.aggregate, std::to_string(r.seed),
                      r.score ? FormatDouble(*r.score) : std::string(),
                      r.score ? std::string("ok") : "missing: " + r.error});
  }
  WriteCsv(t, path);
}

void WriteCorrelationCsv(const CorrelationSummary& c, const std::filesystem::path& path) {
  CsvTable t;
  t.header = {"locale", "log_count", "tau"};
  for (const auto& p : c.points) {
    t.rows.push_back({p.locale, FormatDouble(p.log_count), FormatDouble(p.score)});
  }
  t.rows.push_back({"PEARSON", "", FormatDouble(c.pearson)});
  WriteCsv(t, path);
}

}  // namespace mospred
