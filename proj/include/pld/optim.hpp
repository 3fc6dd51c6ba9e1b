// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pld/tensor.hpp"

namespace pld {

struct AdamState {
  std::uint64_t step = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
};

/// Standard bias-corrected Adam update, in place. Moments are created on the
/// first call. Throws NumericalError naming the parameter on a non-finite
/// gradient, leaving parameters and state untouched.
void adam_step(AdamState& state, std::vector<Tensor>& params, const std::vector<Tensor>& grads);

/// Loss value plus the rectifier signature of the evaluation.
struct LossProbe {
  double value = 0.0;
  std::uint64_t kink_signature = 0;
};

using LossFn = std::function<LossProbe(const std::vector<Tensor>&)>;

struct FiniteDiffResult {
  std::vector<Tensor> gradient;
  /// Elements whose +h / -h evaluations crossed a rectifier kink; their
  /// central difference is meaningless and they are excluded from checks.
  std::vector<std::vector<bool>> skipped;
  std::size_t skipped_count = 0;
};

/// Central differences with step h_scale * max(1, |w|) per element.
FiniteDiffResult finite_diff_gradient(const LossFn& loss, const std::vector<Tensor>& params, double h_scale = 1e-5);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  bool pass = true;
};

/// Elementwise |a - f| / max(|a|, |f|) over elements with max(|a|,|f|) > floor.
GradCheckReport compare_gradients(const std::vector<Tensor>& analytic, const FiniteDiffResult& fd,
                                  double tolerance = 1e-4, double floor = 1e-8);

}  // namespace pld
