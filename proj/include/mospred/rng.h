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

#ifndef MOSPRED_RNG_H_
#define MOSPRED_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>

namespace mospred {

// Mixes a base seed with stream identifiers (splitmix64 finalizer), so that
// per-utterance or per-replica streams are independent of generation order.
uint64_t DeriveSeed(uint64_t seed, uint64_t a, uint64_t b = 0);

// Deterministic random source. The standard library distributions are
// implementation-defined, so every draw used by the toolkit goes through
// these methods to keep outputs bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n). n must be positive.
  uint64_t UniformInt(uint64_t n);
  double Normal();
  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }
  bool Bernoulli(double p) { return Uniform() < p; }
  uint64_t Poisson(double mean);

 private:
  std::mt19937_64 engine_;
};

}  // namespace mospred

#endif  // MOSPRED_RNG_H_
