// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <vector>

#include "pld/model.hpp"
#include "pld/tensor.hpp"

namespace pld {

/// Any denoiser: maps an (N,C,H,W) batch to a batch of the same shape, one
/// item at a time (items must not interact).
using Denoiser = std::function<Tensor(const Tensor&)>;

/// Affine map on flattened items: R(v) = matrix * v + offset.
struct LinearMap {
  std::size_t dim = 0;
  std::vector<double> matrix;  // dim x dim, row-major
  std::vector<double> offset;  // dim, may be empty

  static LinearMap scaled_identity(std::size_t dim, double gain);
  /// Entries iid N(0, scale^2 / dim) plus `diagonal` on the diagonal.
  static LinearMap random(std::size_t dim, SeededRng& rng, double scale = 1.0, double diagonal = 0.0);

  /// (C,H,W) item or (N,C,H,W) batch.
  Tensor apply(const Tensor& v) const;
  double trace_weighted(const Tensor& variance) const;
};

Denoiser linear_denoiser(LinearMap map);
Denoiser model_denoiser(DenoiserModel model);
Denoiser pointwise_denoiser(std::function<double(double)> f);
Denoiser constant_denoiser(double value);

/// Pointwise convex combination t*A + (1-t)*B.
Denoiser blend(Denoiser a, Denoiser b, double t);

}  // namespace pld
