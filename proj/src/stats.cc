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

#include "mospred/stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mospred/rng.h"

namespace mospred {

namespace {

void CheckPaired(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("length mismatch: " + std::to_string(x.size()) +
                                " vs " + std::to_string(y.size()));
  }
  if (x.size() < 2) throw std::invalid_argument("need at least two pairs");
  for (size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw std::invalid_argument("non-finite value in correlation input");
    }
  }
}

// Sorts v[lo, hi) ascending and returns the number of inversions.
int64_t MergeCount(std::vector<double>& v, std::vector<double>& tmp, size_t lo,
                   size_t hi) {
  if (hi - lo < 2) return 0;
  const size_t mid = lo + (hi - lo) / 2;
  int64_t swaps = MergeCount(v, tmp, lo, mid) + MergeCount(v, tmp, mid, hi);
  size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<int64_t>(mid - i);
      tmp[k++] = v[j++];
    } else {
      tmp[k++] = v[i++];
    }
  }
  while (i < mid) tmp[k++] = v[i++];
  while (j < hi) tmp[k++] = v[j++];
  std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo),
            tmp.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

int64_t Pairs(int64_t t) { return t * (t - 1) / 2; }

}  // namespace

double KendallTauB(std::span<const double> x, std::span<const double> y) {
  CheckPaired(x, y);
  const size_t n = x.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });

  int64_t x_ties = 0, joint_ties = 0;
  for (size_t i = 0; i < n;) {
    size_t j = i + 1;
    while (j < n && x[order[j]] == x[order[i]]) ++j;
    x_ties += Pairs(static_cast<int64_t>(j - i));
    for (size_t k = i; k < j;) {
      size_t m = k + 1;
      while (m < j && y[order[m]] == y[order[k]]) ++m;
      joint_ties += Pairs(static_cast<int64_t>(m - k));
      k = m;
    }
    i = j;
  }

  std::vector<double> ys(n), tmp(n);
  for (size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  const int64_t swaps = MergeCount(ys, tmp, 0, n);

  int64_t y_ties = 0;
  for (size_t i = 0; i < n;) {
    size_t j = i + 1;
    while (j < n && ys[j] == ys[i]) ++j;
    y_ties += Pairs(static_cast<int64_t>(j - i));
    i = j;
  }

  const int64_t total = Pairs(static_cast<int64_t>(n));
  if (total == x_ties || total == y_ties) {
    throw DegenerateError("Kendall tau-b undefined: all values tied on one side");
  }
  // concordant - discordant
  const int64_t score = total - x_ties - y_ties + joint_ties - 2 * swaps;
  return static_cast<double>(score) /
         std::sqrt(static_cast<double>(total - x_ties) *
                   static_cast<double>(total - y_ties));
}

double Mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of an empty sequence");
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double Pearson(std::span<const double> x, std::span<const double> y) {
  CheckPaired(x, y);
  const double mx = Mean(x), my = Mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw DegenerateError("Pearson correlation undefined: zero variance");
  }
  return sxy / std::sqrt(sxx * syy);
}

double Quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sequence");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Interval BootstrapCi(size_t n, const ResampleStatistic& statistic,
                     int num_resamples, double level, uint64_t seed) {
  if (num_resamples < 1) throw std::invalid_argument("need at least one resample");
  if (n < 2) throw std::invalid_argument("bootstrap needs at least two units");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("level must be in (0, 1)");
  Rng rng(seed);
  std::vector<size_t> sample(n);
  std::vector<double> stats;
  stats.reserve(num_resamples);
  for (int b = 0; b < num_resamples; ++b) {
    for (size_t& s : sample) s = rng.UniformInt(n);
    try {
      stats.push_back(statistic(sample));
    } catch (const DegenerateError&) {
      // dropped
    }
  }
  if (stats.empty()) throw DegenerateError("every bootstrap resample was degenerate");
  const double alpha = (1.0 - level) / 2.0;
  Interval out;
  out.resamples = static_cast<int>(stats.size());
  out.low = Quantile(stats, alpha);
  out.high = Quantile(std::move(stats), 1.0 - alpha);
  return out;
}

}  // namespace mospred
