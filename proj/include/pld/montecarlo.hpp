// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>

#include "pld/denoiser.hpp"
#include "pld/noise.hpp"
#include "pld/rng.hpp"

namespace pld {

/// Streaming mean and variance (Welford). Adding the same value repeatedly
/// keeps the mean exact.
struct RunningStat {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++count;
    const double d = v - mean;
    mean += d / static_cast<double>(count);
    m2 += d * (v - mean);
  }
  double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  double standard_error() const { return count > 0 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0; }
};

/// Draws a clean image for one realization.
using CleanSampler = std::function<Tensor(SeededRng&)>;
CleanSampler fixed_image(Tensor x);

/// A chunk of realizations as (B,C,H,W) tensors.
struct Realizations {
  Tensor x;
  Tensor n;
  Tensor z;      // zero when alpha == 0
  Tensor y_hat;  // x + n + alpha z
  Tensor n_hat;  // n + alpha z
  Tensor out;    // R(y_hat)

  std::size_t count() const { return x.empty() ? 0 : x.extent(0); }
};

/// Realizations first .. first+count-1. Realization k draws x, n and z, in
/// that order, from rng.split(k), so results do not depend on chunking or
/// thread count. z follows auxiliary_variance(spec, y) with y = x + n.
Realizations realize(const Denoiser& denoiser, const CleanSampler& clean, const NoiseSpec& spec, double alpha,
                     const SeededRng& rng, std::size_t first, std::size_t count);

/// Chunk length keeping a realization batch near 2^18 values.
std::size_t chunk_length(std::size_t pixels);

/// Calls f(first, count) over [0, total) in chunks of `chunk`.
template <class F>
void for_each_chunk(std::size_t total, std::size_t chunk, F&& f) {
  for (std::size_t first = 0; first < total; first += chunk) f(first, std::min(chunk, total - first));
}

}  // namespace pld
