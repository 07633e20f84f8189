// Copyright 2026 The dpkit Authors
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

#ifndef DPKIT_RNG_HPP_
#define DPKIT_RNG_HPP_

#include <cstdint>
#include <random>

namespace dpkit {

// All randomness in dpkit flows through Rng. The transforms below are
// hand-rolled on top of the raw mt19937_64 stream instead of using
// std::*_distribution, whose outputs are implementation-defined and would
// break byte-identical reproducibility across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1): 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection sampling; bias-free for any n.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return draw % n;
  }

  // Standard normal via Box-Muller. Draws are cached in pairs.
  double gaussian();

  // Normal with the given mean and standard deviation.
  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

  // Derive an independent stream for a named sub-purpose. splitmix64 over
  // (seed, stream) so that nearby seeds do not produce correlated streams.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace dpkit

#endif  // DPKIT_RNG_HPP_
