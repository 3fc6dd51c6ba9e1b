// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "pld/decomposition.hpp"
#include "pld/denoiser.hpp"
#include "pld/montecarlo.hpp"
#include "pld/noise.hpp"

namespace pld {

inline constexpr double kDefaultSeTolerance = 4.0;

struct PropCheckReport {
  std::string name;
  double statistic = 0.0;
  /// Absolute tolerance the statistic was compared against.
  double tolerance = 0.0;
  bool pass = false;
  bool skipped = false;
  std::size_t sample_count = 0;
  std::vector<std::pair<std::string, double>> components;
  std::string note;

  double component(const std::string& key) const;
  void set(const std::string& key, double value);
  std::string to_json() const;
};

struct LmmseOracle {
  LinearMap map;
  /// The prior + noise covariance was singular and got a ridge.
  bool regularized = false;
};

/// R(y) = mu + C_x (C_x + C_n)^-1 (y - mu); covariances row-major dim x dim.
LmmseOracle lmmse_oracle(const std::vector<double>& prior_mean, const std::vector<double>& prior_cov,
                         const std::vector<double>& noise_cov);

/// Throws ContractError unless R(a u + b v) - R(0) = a (R(u) - R(0)) + b (R(v) - R(0))
/// on random inputs of `shape`.
void linearity_probe(const Denoiser& denoiser, const Shape& item_shape, const SeededRng& rng);

/// Statistic: mean over realizations of
///   ||R(y_hat) - (y - z/alpha)||^2 - ||R(y_hat) - x||^2 - ||n - z/alpha||^2,
/// which vanishes in expectation for affine R; pass within `se_tol` SE.
/// Also reports the noise-compensation term <R n_hat - ..., n - z/alpha>.
PropCheckReport check_prop1(const Denoiser& denoiser, const CleanSampler& clean, const NoiseSpec& spec, double alpha,
                            std::size_t N, const SeededRng& rng, double se_tol = kDefaultSeTolerance);

/// Mis-specified auxiliary variance. For an affine R with linear part
/// `linear`, the risk-identity statistic equals 2 tr(L (Cov z - Cov n)), which for
/// Cov z = (1+beta) Cov n is 2 beta tr(L Cov n). Pass if the paired
/// difference is within `se_tol` SE of 0. Also reports the literal form
/// 2 beta tr(L Cov z) with the inflated covariance.
PropCheckReport check_remark2(const LinearMap& linear, const CleanSampler& clean, const NoiseSpec& spec, double alpha,
                              std::size_t N, const SeededRng& rng, double se_tol = kDefaultSeTolerance);

struct Prop2Options {
  LMode mode = LMode::diagonal;
  /// Realization pairs used for the Lipschitz estimate (0 disables it).
  std::size_t lipschitz_pairs = 200;
  double se_tol = kDefaultSeTolerance;
};

/// At a fixed clean image: Err = |mean(J_k - MSE_k - c_k)| against
/// 2 eps sqrt(E||n - z/alpha||^2) + se_tol SE, eps from residual_stats. The
/// Lipschitz form 2 eps sqrt(E||n||^2) + 2 K E||z||^2 is reported with a
/// sampled lower bound on K; it is informative only.
PropCheckReport check_prop2_bound(const Denoiser& denoiser, const Tensor& x, const NoiseSpec& spec, double alpha,
                                  std::size_t N, const SeededRng& rng, const Prop2Options& options = {});

/// E||A(y_hat) - B(y_hat)||^2 <= (eps^2 + 2 sqrt(delta)) / (1 - sqrt(delta)) + se_tol SE
/// at a fixed clean image. delta >= 1 reports a skip.
PropCheckReport check_corollary_delta(const Denoiser& a, const Denoiser& b, const Tensor& x, const NoiseSpec& spec,
                                      double alpha, std::size_t N, const SeededRng& rng, double delta, double eps2,
                                      double se_tol = kDefaultSeTolerance);

/// Scalar-gain family R_w(v) = w v on one pixel with clean value x and
/// Gaussian noise. A minimizes the sample MSE and B the sample loss J over a
/// grid of gains; delta is their suboptimality under the exact (closed-form)
/// objectives. The family is linear, so eps = 0.
PropCheckReport scalar_gain_corollary(double x, double sigma, double alpha, std::size_t N, const SeededRng& rng,
                                      double grid_step = 1e-5, double se_tol = kDefaultSeTolerance);

/// Posterior mean of a constant patch value under a uniform prior on
/// [0, lambda_max], from the total count S of pixel counts k_i ~ Pois(s x)
/// over m pixels (s = count scale): proportional to x^S exp(-m s x).
double posterior_mean_from_count(double S, std::size_t m, double count_scale, double lambda_max);
/// Same from a patch of scaled observations y_i = k_i / s.
double constant_patch_posterior(double count_scale, double lambda_max, const Tensor& patch);
/// The patch posterior mean as a denoiser (every pixel gets the mean).
Denoiser constant_patch_denoiser(double count_scale, double lambda_max);

struct Example1Result {
  double lambda_max = 0.0;
  double eps2_per_pixel = 0.0;
  double eps2_standard_error = 0.0;
  /// Per-pixel variance of R0(y) across noise draws.
  double output_variance = 0.0;
  std::filesystem::path csv;
  PropCheckReport report;
};

/// Constant 21x21 patch at x = lambda_max / 2, R0 the posterior mean, full
/// L fit. Writes <out_dir>/example1_lambda<k>.csv when out_dir is non-empty.
Example1Result example1_partial_linearity(double lambda_max, std::size_t N, const SeededRng& rng,
                                          const std::filesystem::path& out_dir = {}, double count_scale = 1.0,
                                          std::size_t patch = 21);

/// Finite-difference checks of every loss on random 8x8 instances.
std::vector<PropCheckReport> gradient_suite(std::uint64_t seed, std::size_t seeds = 5);

/// Penalty of affine models over `trials` random pairs and the bitwise
/// tau1 q1 + tau2 q2 == y_hat identity.
PropCheckReport penalty_exactness(std::uint64_t seed, std::size_t trials = 100);

}  // namespace pld
