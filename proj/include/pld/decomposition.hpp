// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pld/denoiser.hpp"
#include "pld/montecarlo.hpp"
#include "pld/noise.hpp"

namespace pld {

// Monte-Carlo decomposition of a denoiser at a fixed clean image x:
//   R(y_hat) = g(x) + L n_hat + e,   n_hat = n + alpha z,
// with g the conditional mean and L the least-squares linear part.

enum class LMode { full, diagonal };

/// Fitted linear part: an m x m matrix (row-major) or m diagonal entries.
struct LinearPart {
  LMode mode = LMode::diagonal;
  std::size_t dim = 0;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const;
  /// L applied to an (C,H,W) item or (N,C,H,W) batch.
  Tensor apply(const Tensor& n_hat) const;
  /// sum_i L_ii variance_i, i.e. tr(L Cov) for a diagonal covariance.
  double trace_weighted(const Tensor& variance) const;
};

struct GEstimate {
  Tensor mean;
  Tensor standard_error;
  std::size_t sample_count = 0;
};

/// Sample mean of R(y_hat) over N draws, with a standard-error map. N >= 100.
GEstimate estimate_g(const Denoiser& denoiser, const Tensor& x, const NoiseSpec& spec, double alpha, std::size_t N,
                     const SeededRng& rng);

inline constexpr double kDefaultRidge = 1e-8;
inline constexpr std::size_t kMaxFullDim = 4096;

/// Least-squares fit of R(y_hat) - g onto n_hat (normal equations with
/// ridge * mean(diag Gram) added to the normalized Gram matrix). Full mode needs
/// m <= 4096 and N >= 2m.
LinearPart fit_L(const Denoiser& denoiser, const Tensor& x, const Tensor& g_of_x, const NoiseSpec& spec, double alpha,
                 std::size_t N, const SeededRng& rng, LMode mode, double ridge = kDefaultRidge);

struct DecompositionOptions {
  LMode mode = LMode::diagonal;
  double ridge = kDefaultRidge;
  /// Number of leading realizations whose (n_hat, R(y_hat), e) are kept.
  std::size_t retain = 0;
};

struct Decomposition {
  Tensor g_of_x;
  Tensor g_standard_error;
  LinearPart L;
  /// RSS / ((N - p) m) with p fitted coefficients per pixel.
  double eps2_per_pixel = 0.0;
  double eps2_standard_error = 0.0;
  /// Per-pixel mean and standard error of e over the realizations.
  Tensor residual_mean;
  Tensor residual_standard_error;
  std::size_t sample_count = 0;
  std::vector<Tensor> retained_n_hat;
  std::vector<Tensor> retained_output;
  std::vector<Tensor> residual_samples;
};

/// Joint fit of g and L (regression with intercept, so g uses n_hat as a
/// control variate), then a second pass over the same realizations for the
/// residual statistics.
Decomposition residual_stats(const Denoiser& denoiser, const Tensor& x, const NoiseSpec& spec, double alpha,
                             std::size_t N, const SeededRng& rng, const DecompositionOptions& options = {});

/// Estimate of E<z, L z> = tr(L Cov z) with Cov z = auxiliary_variance(spec, x_const),
/// L fitted at the constant image x_const.
double zLz_statistic(const Denoiser& denoiser, const Tensor& x_const, const NoiseSpec& spec, double alpha,
                     std::size_t N, const SeededRng& rng, LMode mode = LMode::diagonal);

struct LinearityScatter {
  std::size_t pixel_index = 0;
  /// ([L n_hat]_i, [R(y_hat) - g(x)]_i) per realization.
  std::vector<std::pair<double, double>> pairs;
};

/// Fresh realizations (substreams offset past those used for the fit).
LinearityScatter export_scatter(const Denoiser& denoiser, const Tensor& x, const Decomposition& dec, std::size_t pixel,
                                const NoiseSpec& spec, double alpha, std::size_t N, const SeededRng& rng);

/// Columns Ln_hat_i,R_minus_g_i and, with `reference`, the diagonal line value.
void write_scatter_csv(const std::filesystem::path& path, const LinearityScatter& scatter, bool reference = false);

std::string decomposition_report_json(const Decomposition& dec, std::optional<double> zLz = std::nullopt);

}  // namespace pld
