// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "pld/rng.hpp"
#include "pld/tensor.hpp"

namespace pld {

/// Corruption process for n and the matched auxiliary vector z. z is always
/// Gaussian; `aux_variance_scale` = 1 + beta mis-specifies its variance.
struct NoiseSpec {
  enum class Kind { gaussian, poisson, var_map };

  Kind kind = Kind::gaussian;
  double sigma = 0.0;
  double lambda = 1.0;
  Tensor variance;
  double aux_variance_scale = 1.0;

  static NoiseSpec gaussian(double sigma);
  static NoiseSpec poisson(double lambda);
  static NoiseSpec variance_map(Tensor variance);

  NoiseSpec with_aux_scale(double scale) const;
  void validate() const;
  std::string describe() const;
};

/// Largest per-pixel noise standard deviation, used to scale the penalty
/// mask. For Poisson noise this is sqrt(max(y)/lambda) over `y`.
double sigma_max(const NoiseSpec& spec, const Tensor& y);

/// Per-pixel variance of n for a clean image (Poisson: x/lambda).
Tensor noise_variance(const NoiseSpec& spec, const Tensor& x);
/// Per-pixel variance z is drawn with for an observation y, including the
/// auxiliary scale (Poisson: max(y,0)/lambda).
Tensor auxiliary_variance(const NoiseSpec& spec, const Tensor& y);

Tensor sample_noise(const NoiseSpec& spec, const Tensor& x, SeededRng& rng);
Tensor sample_auxiliary(const NoiseSpec& spec, const Tensor& y, SeededRng& rng);

/// Observations, auxiliary vectors and alpha are rounded onto dyadic
/// lattices (y on 2^-40, z and alpha on 2^-20). Products alpha*z are then
/// exact, so y_hat = y + alpha*z and y_hat - alpha*z == y hold bitwise for
/// |values| < 32. The rounding moves values by at most 2^-21.
inline constexpr int kImageLatticeBits = 40;
inline constexpr int kAuxLatticeBits = 20;
double snap(double v, int bits);
Tensor snap(const Tensor& t, int bits);
bool on_lattice(const Tensor& t, int bits);

struct CorruptedSample {
  Tensor y;
  Tensor z;
  double alpha = 1.0;
  Tensor y_hat;
  Tensor target;
};

/// y = x + n, then make_sample_from_observation.
CorruptedSample make_sample(const Tensor& x, const NoiseSpec& spec, double alpha, SeededRng& rng);
/// Draws z for a fixed observation y (the unsupervised setting).
CorruptedSample make_sample_from_observation(const Tensor& y, const NoiseSpec& spec, double alpha, SeededRng& rng);
/// Assembles a sample from given y, z, alpha.
CorruptedSample assemble_sample(const Tensor& y, const Tensor& z, double alpha);

}  // namespace pld
