// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pld/denoiser.hpp"
#include "pld/noise.hpp"
#include "pld/rng.hpp"
#include "pld/tensor.hpp"

namespace pld {

// Noise-variance estimation from noisy single-channel (1,H,W) images.

/// d_i^2 = sum over 4-neighbours j of (y_i - y_j)^2 / (2 |N(i)|).
Tensor neighbor_diff_map(const Tensor& y);

inline constexpr std::size_t kSmoothWindow = 10;
inline constexpr double kSmoothThreshold = 0.02;

struct SmoothMask {
  Tensor s;                // 10x10 local mean of y
  Tensor f;                // 10x10 local mean of (s - y)^2
  std::vector<bool> mask;  // f_i <= 0.02 (s_i - min s)

  std::size_t count() const;
};

/// The 10x10 window at pixel (r, c) spans rows r-4..r+5 and columns c-4..c+5,
/// truncated at the borders and renormalized to sum 1.
Tensor box_mean(const Tensor& y, std::size_t window = kSmoothWindow);
SmoothMask smooth_mask(const Tensor& y);

struct VarianceBin {
  double intensity = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};

struct VarianceCurve {
  std::vector<VarianceBin> bins;
  double fit_mu = 0.0;
  double fit_lambda = std::numeric_limits<double>::infinity();
};

/// Bins centred on k/255 with half-width 0.5/255; empty bins dropped.
VarianceCurve binned_variance(const Tensor& y, const Tensor& s, const std::vector<bool>& F, const Tensor& d2);
/// neighbor_diff_map + smooth_mask + binned_variance.
VarianceCurve binned_variance(const Tensor& y);
/// Count-weighted average of curves from several images.
VarianceCurve merge_curves(std::span<const VarianceCurve> curves);

struct LinearFit {
  double mu = 0.0;
  double lambda = std::numeric_limits<double>::infinity();
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;

  /// max(0, intercept + slope v)
  double operator()(double v) const;
};

/// Count-weighted least squares V ~ intercept + slope v; reported as
/// V(v) = (v - mu) / lambda. A non-positive slope leaves lambda infinite
/// (signal-independent noise of variance `intercept`).
LinearFit fit_linear(const VarianceCurve& curve);

/// n/(n-1) sum_j (a_j - y/n)^2 with y = sum_j a_j.
Tensor multiframe_variance(std::span<const Tensor> frames);

void write_curve_csv(const std::filesystem::path& path, const VarianceCurve& curve);

struct RefineEntry {
  double candidate = 0.0;
  double statistic = 0.0;
};

struct RefineReport {
  double chosen = 0.0;
  std::vector<RefineEntry> table;
  /// True when every statistic was negative; `chosen` is then the largest.
  bool all_negative = false;
  /// Statistics strictly decrease along the candidate order.
  bool monotone_decreasing = false;

  std::string to_json() const;
};

/// For each candidate, `fine_tune` returns a denoiser trained with that
/// candidate and `spec_for` the noise spec used for z; the zLz statistic is
/// evaluated at x_const. Picks the smallest positive statistic.
RefineReport refine_lambda(const std::function<Denoiser(double)>& fine_tune,
                           const std::function<NoiseSpec(double)>& spec_for, std::span<const double> candidates,
                           const Tensor& x_const, double alpha, std::size_t N, const SeededRng& rng);

}  // namespace pld
