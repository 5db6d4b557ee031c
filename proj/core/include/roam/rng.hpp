// Copyright 2026 The roam-grpo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace roam {

/// Counter-based random stream.
///
/// A stream is fully determined by the tuple it was keyed with, so rollouts
/// keyed by (seed, step, task, member) can be drawn in any order or in
/// parallel and still reproduce bit-for-bit. The generator is SplitMix64,
/// which is itself a counter passed through a bijective mixer.
///
/// Satisfies UniformRandomBitGenerator. `uniform()` and `normal()` are
/// implemented here rather than through <random> distributions because the
/// latter are implementation-defined and would break cross-toolchain
/// reproducibility of traces.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t state) noexcept : state_(state) {}

  template <class... Parts>
  static Stream keyed(std::uint64_t seed, Parts... parts) noexcept {
    std::uint64_t h = mix(seed ^ 0x6a09e667f3bcc909ULL);
    ((h = mix(h ^ (static_cast<std::uint64_t>(parts) + 0x9e3779b97f4a7c15ULL))),
     ...);
    return Stream(h);
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept {
    __extension__ using u128 = unsigned __int128;
    return static_cast<std::uint64_t>((static_cast<u128>((*this)()) * n) >> 64);
  }

  /// Standard normal via Box-Muller (one variate per call).
  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace roam
