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

#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "mospred/model.h"
#include "mospred/rng.h"
#include "test_util.h"

namespace mospred {
namespace {

Manifest WithCounts(const std::map<std::string, int>& counts) {
  std::vector<RatingRecord> recs;
  int k = 0;
  for (const auto& [loc, n] : counts) {
    for (int i = 0; i < n; ++i) {
      recs.push_back(testing::MakeRecord(loc + "-" + std::to_string(i), loc,
                                         {1.0 + 0.5 * (k++ % 9)}));
    }
  }
  return Manifest(recs);
}

TEST_CASE("temperature probabilities") {
  const LocaleDistribution p = {{"aa-AA", 0.8}, {"bb-BB", 0.2}};
  SUBCASE("tau 1 is the natural distribution") {
    const auto q = TemperatureProbs(p, 1.0);
    CHECK(q.at("aa-AA") == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(q.at("bb-BB") == doctest::Approx(0.2).epsilon(1e-15));
  }
  SUBCASE("huge tau is uniform") {
    const auto q = TemperatureProbs({{"a-A", 0.7}, {"b-B", 0.2}, {"c-C", 0.1}}, 1e9);
    for (const auto& [loc, v] : q) CHECK(std::abs(v - 1.0 / 3.0) < 1e-6);
  }
  SUBCASE("tau 10 by direct evaluation") {
    const double a = std::pow(0.8, 0.1), b = std::pow(0.2, 0.1);
    const auto q = TemperatureProbs(p, 10.0);
    CHECK(q.at("aa-AA") == doctest::Approx(a / (a + b)).epsilon(1e-14));
    CHECK(std::abs(q.at("aa-AA") - 0.5346) < 5e-5);
    CHECK(std::abs(q.at("bb-BB") - 0.4654) < 5e-5);
  }
  SUBCASE("order preserving and monotone toward uniform") {
    const LocaleDistribution nat = {{"a-A", 0.6}, {"b-B", 0.3}, {"c-C", 0.1}};
    double prev_spread = 1.0;
    for (double tau : {1.0, 1.5, 2.0, 5.0, 10.0, 100.0}) {
      const auto q = TemperatureProbs(nat, tau);
      CHECK(q.at("a-A") > q.at("b-B"));
      CHECK(q.at("b-B") > q.at("c-C"));
      double sum = 0.0;
      for (const auto& [k, v] : q) sum += v;
      CHECK(std::abs(sum - 1.0) < 1e-12);
      const double spread = q.at("a-A") - q.at("c-C");
      CHECK(spread < prev_spread);
      prev_spread = spread;
    }
  }
  CHECK_THROWS_AS(TemperatureProbs({{"a-A", 1.0}, {"b-B", 0.0}}, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(TemperatureProbs(LocaleDistribution{}, 2.0), std::invalid_argument);
}

TEST_CASE("manifest-based probabilities use record counts") {
  const auto q = TemperatureProbs(WithCounts({{"aa-AA", 30}, {"bb-BB", 10}}), 1.0);
  CHECK(q.at("aa-AA") == doctest::Approx(0.75));
}

TEST_CASE("next batch") {
  SUBCASE("single locale") {
    const Manifest m = WithCounts({{"en-US", 5}});
    Rng rng(1);
    const auto batch = NextBatch(m, {{"en-US", 1.0}}, 17, rng);
    CHECK(batch.size() == 17);
    for (const auto& item : batch) {
      CHECK(item.locale_for_embedding == "en-US");
      CHECK(m[item.record].utterance_id == item.utterance_id);
      CHECK(item.target == AggregateTarget(m[item.record]));
    }
  }
  SUBCASE("determinism") {
    const Manifest m = WithCounts({{"aa-AA", 5}, {"bb-BB", 7}});
    SamplerConfig cfg;
    cfg.seed = 99;
    BatchSampler a(m, cfg), b(m, cfg);
    for (int i = 0; i < 20; ++i) {
      const auto x = a.Next(), y = b.Next();
      REQUIRE(x.size() == y.size());
      for (size_t k = 0; k < x.size(); ++k) {
        CHECK(x[k].utterance_id == y[k].utterance_id);
        CHECK(x[k].locale_for_embedding == y[k].locale_for_embedding);
      }
    }
  }
  SUBCASE("frequencies concentrate") {
    const Manifest m = WithCounts({{"aa-AA", 3}, {"bb-BB", 3}});
    Rng rng(5);
    std::map<std::string, int> hits;
    std::set<std::string> ids;
    for (const auto& r : m.records()) ids.insert(r.utterance_id);
    int total = 0;
    for (int i = 0; i < 1000; ++i) {
      for (const auto& item : NextBatch(m, {{"aa-AA", 0.75}, {"bb-BB", 0.25}}, 100, rng)) {
        ++hits[m[item.record].locale];
        CHECK(ids.count(item.utterance_id));
        ++total;
      }
    }
    CHECK(total == 100000);
    CHECK(std::abs(hits["aa-AA"] / 1e5 - 0.75) < 0.01);
  }
  SUBCASE("locale without records") {
    Rng rng(1);
    CHECK_THROWS_AS(NextBatch(WithCounts({{"aa-AA", 3}}), {{"zz-ZZ", 1.0}}, 4, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("ANY-LOC substitution") {
  const Manifest m = WithCounts({{"aa-AA", 10}});
  Rng rng(3);
  auto batch = NextBatch(m, {{"aa-AA", 1.0}}, 1000, rng);
  const auto original = batch;
  SUBCASE("fraction 0") {
    ApplyAnyLoc(batch, 0.0, rng);
    for (size_t i = 0; i < batch.size(); ++i) {
      CHECK(batch[i].locale_for_embedding == original[i].locale_for_embedding);
    }
  }
  SUBCASE("fraction 1") {
    ApplyAnyLoc(batch, 1.0, rng);
    for (size_t i = 0; i < batch.size(); ++i) {
      CHECK(batch[i].locale_for_embedding == kAnyLocale);
      CHECK(batch[i].target == original[i].target);
      CHECK(batch[i].utterance_id == original[i].utterance_id);
    }
  }
  SUBCASE("fraction 0.05 within 3 sigma") {
    int count = 0;
    for (int k = 0; k < 100; ++k) {
      auto b = NextBatch(m, {{"aa-AA", 1.0}}, 1000, rng);
      ApplyAnyLoc(b, 0.05, rng);
      for (const auto& item : b) count += item.locale_for_embedding == kAnyLocale;
    }
    CHECK(count >= 4500);
    CHECK(count <= 5500);
  }
  CHECK_THROWS_AS(ApplyAnyLoc(batch, 1.5, rng), std::invalid_argument);
}

TEST_CASE("sampler config validation") {
  SamplerConfig cfg;
  CHECK(cfg.temperature == 10.0);
  CHECK(cfg.anyloc_fraction == 0.05);
  CHECK(cfg.batch_size == 32);
  cfg.temperature = 0.5;
  CHECK_THROWS_AS(cfg.Validate(), std::invalid_argument);
}

}  // namespace
}  // namespace mospred
