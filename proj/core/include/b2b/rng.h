// Copyright 2026 The b2b-plc Authors
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

#ifndef B2B_RNG_H_
#define B2B_RNG_H_

#include <cstdint>

namespace b2b {

// SplitMix64 used as a counter-based generator: the k-th output of a stream
// seeded with `s` is Mix(s + (k + 1) * kGamma). Every random draw in the
// project goes through this class so that results are identical across
// platforms and standard libraries (std::*_distribution is not).
class SplitMix64 {
 public:
  static constexpr uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  static uint64_t Mix(uint64_t z);

  // Random access into the stream without advancing it.
  static uint64_t At(uint64_t seed, uint64_t counter) {
    return Mix(seed + (counter + 1) * kGamma);
  }

  uint64_t Next() {
    state_ += kGamma;
    return Mix(state_);
  }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Unbiased integer in [0, n). n must be > 0.
  uint64_t Below(uint64_t n);
  // Standard normal via Box-Muller; the second variate is cached.
  double Normal();
  double Normal(double mean, double stddev) {
    return mean + stddev * Normal();
  }

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Converts a stream value to [0, 1) with 53 random bits.
inline double ToUnit(uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Derives an independent seed for a named sub-stream. Used to keep e.g.
// training and evaluation traces in disjoint seed namespaces.
uint64_t DeriveSeed(uint64_t seed, uint64_t stream);

}  // namespace b2b

#endif  // B2B_RNG_H_
