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

#ifndef MOSPRED_STATS_H_
#define MOSPRED_STATS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace mospred {

// Raised when a statistic is undefined for its input (all ties, zero
// variance). Distinct from argument errors so callers can report the case
// as "skipped" instead of as a number.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Kendall tau-b in O(n log n): sort by (x, y), count joint ties, then count
// inversions of y with a merge sort.
double KendallTauB(std::span<const double> x, std::span<const double> y);

// Sample Pearson correlation.
double Pearson(std::span<const double> x, std::span<const double> y);

double Mean(std::span<const double> v);
// Linear-interpolation quantile (type 7) of unsorted data, q in [0, 1].
double Quantile(std::vector<double> values, double q);

struct Interval {
  double low = 0.0;
  double high = 0.0;
  int resamples = 0;  // resamples on which the statistic was defined
};

using ResampleStatistic = std::function<double(std::span<const size_t>)>;

// Percentile bootstrap over `n` units resampled with replacement. Resamples
// whose statistic is degenerate are dropped; if all are, DegenerateError.
Interval BootstrapCi(size_t n, const ResampleStatistic& statistic,
                     int num_resamples = 1000, double level = 0.95,
                     uint64_t seed = 0);

}  // namespace mospred

#endif  // MOSPRED_STATS_H_
