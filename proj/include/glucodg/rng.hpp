// Copyright (c) 2026 The glucodg Authors. All rights reserved.
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
//
// Deterministic randomness. Every parallel unit of work (a tree, a
// meta-iteration, a repeat) gets its own substream derived from the run seed
// and a textual tag, so results are bitwise identical no matter how the work
// is scheduled across threads. Samplers are hand-rolled because the standard
// library's distributions are implementation-defined and would silently break
// cross-platform reproducibility.

#ifndef GLUCODG_RNG_HPP_
#define GLUCODG_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include "glucodg/core.hpp"

namespace glucodg {

struct RngSeed {
  std::uint64_t value = 0;
};

namespace detail {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Deterministic substream derivation: hash the tag bytes into the parent seed
// (FNV-1a) and finalize with two splitmix rounds. Pure function of its
// arguments; distinct tags give unrelated streams.
inline RngSeed derive_substream(RngSeed seed, std::string_view tag) {
  require(!tag.empty(), "EmptyTag", "substream tag must be nonempty");
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed.value;
  for (unsigned char c : tag) {
    h ^= c;
    h *= 0x00000100000001b3ULL;
  }
  h ^= static_cast<std::uint64_t>(tag.size());
  std::uint64_t s = h;
  std::uint64_t out = detail::splitmix64_next(s);
  out ^= detail::splitmix64_next(s);
  return RngSeed{out};
}

// xoshiro256++ seeded through splitmix64. Small, fast, solid statistics.
class Rng {
 public:
  explicit Rng(RngSeed seed) {
    std::uint64_t sm = seed.value;
    for (auto& word : s_) word = detail::splitmix64_next(sm);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl64(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl64(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Lemire's method with rejection, unbiased.
  std::size_t uniform_below(std::size_t n) {
    require(n > 0, "OutOfRange", "uniform_below(0)");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t threshold = (0ULL - bound) % bound;
    while (true) {
      const std::uint64_t x = next_u64();
      const unsigned __int128 m =
          static_cast<unsigned __int128>(x) * static_cast<unsigned __int128>(bound);
      if (static_cast<std::uint64_t>(m) >= threshold)
        return static_cast<std::size_t>(static_cast<std::uint64_t>(m >> 64));
    }
  }

  // Standard normal via Box-Muller. One value per call; the sine twin is
  // discarded to keep the stream position a simple function of call count.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma(shape, 1) via Marsaglia-Tsang squeeze; shapes below one are boosted
  // through Gamma(shape + 1) * U^(1/shape).
  double gamma(double shape) {
    require(shape > 0.0, "InvalidAlpha", "gamma shape must be > 0");
    if (shape < 1.0) {
      double u = uniform();
      while (u <= 0.0) u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform();
      while (u <= 0.0) u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Beta(a, b) as the gamma ratio X / (X + Y).
  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    const double s = x + y;
    if (s <= 0.0) return 0.5;  // both underflowed; split the difference
    return x / s;
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace glucodg

#endif  // GLUCODG_RNG_HPP_
