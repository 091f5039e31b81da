// cleanadapt/rng.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace cleanadapt {

// Random numbers come from std::mt19937_64 (fully specified by the standard,
// so streams are identical across toolchains). The distribution transforms
// below are implemented here because the std:: distributions are not
// portable across library implementations.
//
// Independent sub-streams are derived from the root seed by folding a purpose
// tag and up to two indices (sample id, epoch, ...) through splitmix64:
//
//   s = splitmix64(seed ^ splitmix64(purpose ^ splitmix64(a ^ splitmix64(b))))
//
// and seeding a fresh mt19937_64 with s.

enum class Stream : std::uint64_t {
  kInit = 0x1001,
  kShuffle = 0x1002,
  kWeakAugment = 0x1003,
  kStrongAugment = 0x1004,
  kDataStructure = 0x1005,
  kDataSamples = 0x1006,
  kTest = 0x10ff,
};

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t DeriveSeed(std::uint64_t seed, Stream purpose,
                                std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = SplitMix64(b);
  h = SplitMix64(a ^ h);
  h = SplitMix64(static_cast<std::uint64_t>(purpose) ^ h);
  return SplitMix64(seed ^ h);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  static Rng For(std::uint64_t seed, Stream purpose, std::uint64_t a = 0,
                 std::uint64_t b = 0) {
    return Rng(DeriveSeed(seed, purpose, a, b));
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t NextU64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n), unbiased (rejection sampling).
  std::uint64_t UniformInt(std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  bool Bernoulli(double p) { return Uniform() < p; }

  // Standard normal via Box-Muller; the second variate is discarded so each
  // call consumes exactly two engine outputs.
  double Normal() {
    const double u1 = 1.0 - Uniform();  // (0, 1]
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double Normal(double mean, double stddev) { return mean + stddev * Normal(); }

  // Fisher-Yates, back to front.
  template <typename T>
  void Shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(UniformInt(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace cleanadapt
