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

#include "mospred/sampler.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mospred/model.h"

namespace mospred {

void SamplerConfig::Validate() const {
  if (!(temperature >= 1.0)) throw std::invalid_argument("temperature must be >= 1");
  if (!(anyloc_fraction >= 0.0 && anyloc_fraction <= 1.0)) {
    throw std::invalid_argument("anyloc_fraction must lie in [0, 1]");
  }
  if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
}

LocaleDistribution TemperatureProbs(const std::map<std::string, double>& natural,
                                    double temperature) {
  if (natural.empty()) throw std::invalid_argument("empty locale distribution");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  double max_log = -INFINITY;
  for (const auto& [locale, p] : natural) {
    if (!(p > 0.0)) {
      throw std::invalid_argument("locale '" + locale + "' has zero probability");
    }
    max_log = std::max(max_log, std::log(p) / temperature);
  }
  LocaleDistribution q;
  double total = 0.0;
  for (const auto& [locale, p] : natural) {
    const double v = std::exp(std::log(p) / temperature - max_log);
    q[locale] = v;
    total += v;
  }
  for (auto& [_, v] : q) v /= total;
  return q;
}

LocaleDistribution TemperatureProbs(const Manifest& manifest, double temperature) {
  std::map<std::string, double> natural;
  for (const auto& [locale, stat] : LocaleStats(manifest)) natural[locale] = stat.frequency;
  return TemperatureProbs(natural, temperature);
}

std::vector<BatchItem> NextBatch(const Manifest& train, const LocaleDistribution& dist,
                                 int batch_size, Rng& rng) {
  if (dist.empty()) throw std::invalid_argument("empty locale distribution");
  std::vector<const std::vector<size_t>*> members;
  std::vector<const std::string*> locales;
  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& [locale, q] : dist) {
    auto it = train.locale_index().find(locale);
    if (it == train.locale_index().end() || it->second.empty()) {
      throw std::invalid_argument("locale '" + locale + "' has no training records");
    }
    members.push_back(&it->second);
    locales.push_back(&it->first);
    acc += q;
    cumulative.push_back(acc);
  }
  std::vector<BatchItem> batch;
  batch.reserve(batch_size);
  for (int i = 0; i < batch_size; ++i) {
    const double u = rng.Uniform() * acc;
    size_t l = static_cast<size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    l = std::min(l, cumulative.size() - 1);
    const std::vector<size_t>& pool = *members[l];
    const size_t record = pool[rng.UniformInt(pool.size())];
    batch.push_back({record, train[record].utterance_id, *locales[l],
                     AggregateTarget(train[record])});
  }
  return batch;
}

void ApplyAnyLoc(std::vector<BatchItem>& batch, double fraction, Rng& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("ANY-LOC fraction must lie in [0, 1]");
  }
  for (BatchItem& item : batch) {
    if (rng.Bernoulli(fraction)) item.locale_for_embedding = kAnyLocale;
  }
}

BatchSampler::BatchSampler(const Manifest& train, const SamplerConfig& cfg)
    : BatchSampler(train, TemperatureProbs(train, cfg.temperature), cfg) {}

BatchSampler::BatchSampler(const Manifest& train, LocaleDistribution dist,
                           const SamplerConfig& cfg)
    : train_(train), dist_(std::move(dist)), cfg_(cfg), rng_(cfg.seed) {
  cfg_.Validate();
}

std::vector<BatchItem> BatchSampler::Next() {
  std::vector<BatchItem> batch = NextBatch(train_, dist_, cfg_.batch_size, rng_);
  ApplyAnyLoc(batch, cfg_.anyloc_fraction, rng_);
  return batch;
}

}  // namespace mospred
