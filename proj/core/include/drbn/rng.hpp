// Copyright 2026 The DRBN Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DRBN_RNG_HPP
#define DRBN_RNG_HPP

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace drbn {

/// SplitMix64 finalizer. Used for seeding and for deriving stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Hash of a (seed, a, b) triple; the basis of every derived stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept;

/// xoshiro256** generator (Blackman & Vigna). The 256-bit state is filled
/// from a SplitMix64 sequence started at the seed, so identical seeds give
/// identical streams on every platform.
///
/// Streams: `Rng::stream(seed, id)` seeds a generator from
/// `mix_seed(seed, id)`; `split()` draws one word from the parent and uses it
/// as the seed of a child. Every Markov chain owns exactly one Rng.
class Rng {
 public:
  using result_type = std::uint64_t;
  using State = std::array<std::uint64_t, 4>;

  explicit Rng(std::uint64_t seed = 0) noexcept;

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
    return Rng(mix_seed(seed, stream_id));
  }
  static Rng from_state(const State& state) noexcept;
  /// `count` independent streams: stream(seed, first + i).
  static std::vector<Rng> streams(std::uint64_t seed, std::size_t count, std::uint64_t first = 0);

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type next() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }
  result_type operator()() noexcept { return next(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal() noexcept;

  /// Uniform integer in [0, n); n > 0. Rejection sampling, unbiased.
  std::uint64_t below(std::uint64_t n) noexcept;

  Rng split() noexcept { return Rng(next()); }

  const State& state() const noexcept { return state_; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  State state_{};
};

/// Fisher-Yates permutation of [0, n).
std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng);

}  // namespace drbn

#endif  // DRBN_RNG_HPP
