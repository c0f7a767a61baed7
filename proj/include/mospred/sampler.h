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

#ifndef MOSPRED_SAMPLER_H_
#define MOSPRED_SAMPLER_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mospred/manifest.h"
#include "mospred/rng.h"

namespace mospred {

struct SamplerConfig {
  double temperature = 10.0;
  double anyloc_fraction = 0.05;
  int batch_size = 32;
  uint64_t seed = 0;

  void Validate() const;
};

// locale -> sampling probability; sums to one.
using LocaleDistribution = std::map<std::string, double>;

// q_l = p_l^(1/tau) / sum_k p_k^(1/tau). Computed in the log domain so very
// large temperatures stay finite.
LocaleDistribution TemperatureProbs(const std::map<std::string, double>& natural,
                                    double temperature);

// Natural frequencies of `manifest`, re-weighted at `temperature`.
LocaleDistribution TemperatureProbs(const Manifest& manifest, double temperature);

struct BatchItem {
  size_t record = 0;  // index into the training manifest
  std::string utterance_id;
  std::string locale_for_embedding;
  double target = 0.0;
};

// Draws batch_size items independently: a locale from `dist`, then an
// utterance uniformly within it (with replacement).
std::vector<BatchItem> NextBatch(const Manifest& train, const LocaleDistribution& dist,
                                 int batch_size, Rng& rng);

// Replaces each item's embedding locale by ANY-LOC with probability `fraction`.
void ApplyAnyLoc(std::vector<BatchItem>& batch, double fraction, Rng& rng);

// Stateful batch stream: NextBatch followed by ApplyAnyLoc on one rng.
class BatchSampler {
 public:
  BatchSampler(const Manifest& train, const SamplerConfig& cfg);
  BatchSampler(const Manifest& train, LocaleDistribution dist, const SamplerConfig& cfg);

  std::vector<BatchItem> Next();
  const LocaleDistribution& distribution() const { return dist_; }

 private:
  const Manifest& train_;
  LocaleDistribution dist_;
  SamplerConfig cfg_;
  Rng rng_;
};

}  // namespace mospred

#endif  // MOSPRED_SAMPLER_H_
