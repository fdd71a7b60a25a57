/*
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef GATREC_RNG_HPP_
#define GATREC_RNG_HPP_

#include <cstdint>
#include <random>
#include <vector>

namespace gatrec {

/// Seeded random source with portable draw mappings.
///
/// std::mt19937_64's output sequence is fixed by the standard, but the
/// standard distributions are not, so every mapping from raw 64-bit words to
/// doubles, bounded ints, coin flips, and shuffles is implemented here.
/// Identical seeds give identical draw sequences on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of randomness.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform in [0, n), unbiased via rejection. n must be >= 1.
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t rem = (UINT64_MAX % n + 1) % n;  // 2^64 mod n
    const std::uint64_t limit = UINT64_MAX - rem;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r > limit);
    return r % n;
  }

  bool bernoulli(double p) { return uniform01() < p; }

  /// Fisher-Yates, descending index order.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  /// Derives an independent stream seed from (seed, tag) via splitmix64.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace gatrec

#endif  // GATREC_RNG_HPP_
