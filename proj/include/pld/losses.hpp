// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pld/autodiff.hpp"
#include "pld/model.hpp"
#include "pld/noise.hpp"
#include "pld/rng.hpp"

namespace pld {

/// A stack of CorruptedSamples as rank-4 tensors (N,C,H,W).
struct SampleBatch {
  Tensor y;
  Tensor z;
  Tensor y_hat;
  Tensor target;
  std::vector<double> alpha;

  std::size_t size() const noexcept { return alpha.size(); }
};

SampleBatch stack_samples(std::span<const CorruptedSample> samples);

/// Two perturbed copies of y_hat with tau1*q1 + tau2*q2 == y_hat bitwise.
struct PerturbationPair {
  Tensor q1;
  Tensor q2;
  /// Sparse perturbation, recomputed from the clipped pair as (q2-q1)/(beta1+beta2).
  Tensor q;
  /// Diagonal penalty weights; zero off the perturbed pixels.
  Tensor mask_M;
  double tau1 = 0.5;
  double tau2 = 0.5;
  double beta1 = 1.0;
  double beta2 = 1.0;
  std::size_t perturbed = 0;
};

/// tau1 is rounded to a multiple of 2^-kTauBits so the identity can be met
/// exactly by integer arithmetic on the image lattice.
inline constexpr int kTauBits = 8;
/// Sparse pixels are chosen on a jittered grid with this cell size.
inline constexpr std::size_t kPerturbationCell = 5;

/// Builds a perturbation pair for one (C,H,W) image. `q_variance` is the
/// per-pixel variance of the auxiliary vector (q follows z's distribution).
/// Values are clipped to [1.2a-0.2b, 1.2b-0.2a] with (a,b) = `bounds` or the
/// min/max of y_hat. y_hat must lie on the image lattice.
PerturbationPair build_perturbation(const Tensor& y_hat, const Tensor& q_variance, double sigma_max, SeededRng& rng,
                                    std::optional<std::pair<double, double>> bounds = std::nullopt);

/// Fixed blur A, applied as a zero-padded true convolution.
class DeblurOperator {
 public:
  DeblurOperator() = default;
  /// kernel: (kh, kw) with odd extents.
  explicit DeblurOperator(Tensor kernel);

  static DeblurOperator identity();
  static DeblurOperator box(std::size_t size);

  const Tensor& kernel() const noexcept { return kernel_; }
  /// (C,H,W) or (N,C,H,W); channels are blurred independently.
  Tensor apply(const Tensor& image) const;
  ad::Var apply(ad::Var image) const;

 private:
  Tensor kernel_;
  Tensor flipped_;  // (1,1,kh,kw) cross-correlation weight
};

/// Random-walk motion kernel rasterized bilinearly onto size x size and
/// normalized to sum 1. `steps` walk steps of length 0.5 px with turning
/// noise of `turn_sd` radians per step.
Tensor random_motion_kernel(std::size_t size, std::size_t steps, SeededRng& rng, double turn_sd = 0.6);

/// mean over batch and pixels of (R(y_hat) - target)^2.
ad::Var empirical_loss(const BoundModel& model, const SampleBatch& batch);

/// Mean over the batch of per-sample
///   sum_j (M_jj (F(y_hat) - tau1 F(q1) - tau2 F(q2))_j)^2 / perturbed,
/// where F = R, or A∘R when `blur` is given. Samples without perturbed
/// pixels contribute zero.
ad::Var plc_penalty(const BoundModel& model, const SampleBatch& batch, std::span<const PerturbationPair> pairs,
                    const DeblurOperator* blur = nullptr);

/// empirical_loss + gamma * plc_penalty with a single shared forward pass.
/// pairs may be empty when gamma == 0.
ad::Var total_denoise_loss(const BoundModel& model, const SampleBatch& batch, std::span<const PerturbationPair> pairs,
                           double gamma);

/// mean (A R(y_hat) - target)^2 + gamma * penalty on A∘R.
ad::Var deblur_loss(const BoundModel& model, const DeblurOperator& blur, const SampleBatch& batch,
                    std::span<const PerturbationPair> pairs = {}, double gamma = 0.0);

/// mean (R(A_prox x_prox + n_prox) - x_prox)^2 with x_prox = detach(R(y)).
/// y and n_prox are rank-4 batches.
ad::Var proxy_loss(const BoundModel& model, const Tensor& y, const DeblurOperator& blur_prox, const Tensor& n_prox);
/// Same with a precomputed x_prox.
ad::Var proxy_loss_given(const BoundModel& model, const Tensor& x_prox, const DeblurOperator& blur_prox,
                         const Tensor& n_prox);

}  // namespace pld
