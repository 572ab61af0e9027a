// Copyright 2026 The ncderev Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NCDEREV_RNG_H_
#define NCDEREV_RNG_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace ncderev {

// Seeded generator with platform-independent distributions. The standard
// distribution classes are implementation-defined, so uniform and normal
// draws are derived here from the raw 64-bit engine output.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  uint64_t UniformIndex(uint64_t n);

  // Standard normal via Box-Muller (one value per call, no caching).
  double Normal();

  void Shuffle(std::vector<size_t>& items);

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; mixes (seed, index) into an independent stream seed.
uint64_t DeriveSeed(uint64_t seed, uint64_t index);

}  // namespace ncderev

#endif  // NCDEREV_RNG_H_
