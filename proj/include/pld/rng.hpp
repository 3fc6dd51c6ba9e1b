// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "pld/tensor.hpp"

namespace pld {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
/// as easy as 1, 2, 3", SC'11). Exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// Counter-based generator. The 64-bit seed is the Philox key; the 128-bit
/// counter is split into a 64-bit block index (low words) and a 64-bit stream
/// id (high words), so distinct streams never share a counter value.
///
/// All variate generation (uniform, normal, Poisson) is implemented here
/// rather than through <random> distributions, whose algorithms are
/// implementation-defined; sequences are therefore identical across
/// platforms and standard libraries.
class SeededRng {
 public:
  static constexpr std::string_view algorithm_id = "philox4x32-10";

  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream() const noexcept { return stream_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  bool coin() noexcept { return (next_u64() >> 63) != 0; }
  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept;
  double normal(double mean, double stddev) noexcept { return mean + stddev * normal(); }
  /// Poisson variate: inversion below mean 10, PTRS (Hoermann 1993) above.
  std::uint64_t poisson(double mean);

  /// Independent generator for substream `id`, derived deterministically
  /// from this generator's (seed, stream); the parent state is untouched.
  SeededRng split(std::uint64_t id) const noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// i.i.d. N(mean, std^2) samples.
Tensor gaussian_samples(SeededRng& rng, const Shape& shape, double mean, double stddev);

}  // namespace pld
