// Copyright 2026 The Explore Authors
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

#ifndef EXPLORE_RNG_HPP
#define EXPLORE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string_view>

namespace explore {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/**
 * \brief Single-owner random stream with a splittable seed scheme.
 *
 * A stream is identified by a 64-bit key. Substreams are derived from the key
 * (never from the engine state) through a (purpose, index) pair, so the draws a
 * substream produces do not depend on how much randomness the parent consumed
 * or on the order in which sibling substreams are used.
 *
 * The engine is std::mt19937_64, whose output sequence is fixed by the
 * standard. Distribution transforms are implemented here rather than taken from
 * <random>, whose distributions are implementation-defined.
 */
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t key) : key_(key), engine_(detail::splitmix64(key)) {}

  /// Stream for (purpose, index) under a master seed.
  static RngStream derive(std::uint64_t master_seed, std::string_view purpose, std::uint64_t index = 0) {
    return RngStream(derive_key(master_seed, purpose, index));
  }

  static constexpr std::uint64_t derive_key(std::uint64_t parent, std::string_view purpose,
                                            std::uint64_t index) noexcept {
    std::uint64_t k = detail::splitmix64(parent ^ 0x6a09e667f3bcc908ULL);
    k = detail::splitmix64(k ^ detail::fnv1a(purpose));
    return detail::splitmix64(k ^ detail::splitmix64(index + 0x3c6ef372fe94f82bULL));
  }

  [[nodiscard]] RngStream substream(std::string_view purpose, std::uint64_t index = 0) const {
    return RngStream(derive_key(key_, purpose, index));
  }

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Lemire's nearly-divisionless method.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) return 0;
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform integer in [lo, hi] (inclusive).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(uniform_index(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller (one value per call; the pair partner is discarded).
  double normal() {
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

}  // namespace explore

#endif
