// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pld/errors.hpp"

namespace pld {

void adam_step(AdamState& state, std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size()) throw ParameterError("adam_step: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    require_same_shape(params[i], grads[i], "adam_step");
    if (!grads[i].all_finite())
      throw NumericalError("adam_step: non-finite gradient in parameter " + std::to_string(i) + " at step " +
                           std::to_string(state.step + 1));
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.shape());
      state.v.emplace_back(p.shape());
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double mh = m[k] / c1;
      const double vh = v[k] / c2;
      p[k] -= state.lr * mh / (std::sqrt(vh) + state.eps);
    }
  }
}

FiniteDiffResult finite_diff_gradient(const LossFn& loss, const std::vector<Tensor>& params, double h_scale) {
  FiniteDiffResult r;
  std::vector<Tensor> work = params;
  const std::uint64_t base = loss(work).kink_signature;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor g(params[i].shape());
    std::vector<bool> skip(params[i].size(), false);
    for (std::size_t k = 0; k < params[i].size(); ++k) {
      const double w = params[i][k];
      const double h = h_scale * std::max(1.0, std::abs(w));
      work[i][k] = w + h;
      const LossProbe plus = loss(work);
      work[i][k] = w - h;
      const LossProbe minus = loss(work);
      work[i][k] = w;
      if (plus.kink_signature != base || minus.kink_signature != base) {
        skip[k] = true;
        ++r.skipped_count;
        continue;
      }
      g[k] = (plus.value - minus.value) / (2.0 * h);
    }
    r.gradient.push_back(std::move(g));
    r.skipped.push_back(std::move(skip));
  }
  return r;
}

GradCheckReport compare_gradients(const std::vector<Tensor>& analytic, const FiniteDiffResult& fd, double tolerance,
                                  double floor) {
  if (analytic.size() != fd.gradient.size()) throw ParameterError("compare_gradients: parameter count mismatch");
  GradCheckReport rep;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    require_same_shape(analytic[i], fd.gradient[i], "compare_gradients");
    for (std::size_t k = 0; k < analytic[i].size(); ++k) {
      if (fd.skipped[i][k]) {
        ++rep.skipped;
        continue;
      }
      const double a = analytic[i][k], f = fd.gradient[i][k];
      const double scale = std::max(std::abs(a), std::abs(f));
      if (scale <= floor) continue;
      ++rep.checked;
      rep.max_rel_error = std::max(rep.max_rel_error, std::abs(a - f) / scale);
    }
  }
  rep.pass = rep.max_rel_error <= tolerance;
  return rep;
}

}  // namespace pld
