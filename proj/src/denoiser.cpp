// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/denoiser.hpp"

#include <cmath>

#include "pld/errors.hpp"
#include "pld/kernels.hpp"

namespace pld {

LinearMap LinearMap::scaled_identity(std::size_t dim, double gain) {
  LinearMap m;
  m.dim = dim;
  m.matrix.assign(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) m.matrix[i * dim + i] = gain;
  return m;
}

LinearMap LinearMap::random(std::size_t dim, SeededRng& rng, double scale, double diagonal) {
  LinearMap m;
  m.dim = dim;
  m.matrix.resize(dim * dim);
  const double sd = scale / std::sqrt(static_cast<double>(dim));
  for (double& v : m.matrix) v = rng.normal(0.0, sd);
  for (std::size_t i = 0; i < dim; ++i) m.matrix[i * dim + i] += diagonal;
  return m;
}

Tensor LinearMap::apply(const Tensor& v) const {
  if (v.size() % dim != 0 || v.empty()) throw ParameterError("LinearMap: input size is not a multiple of the map size");
  if (!offset.empty() && offset.size() != dim) throw ParameterError("LinearMap: offset size mismatch");
  const std::size_t items = v.size() / dim;
  Tensor out(v.shape());
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count())
  for (std::size_t k = 0; k < items; ++k) {
    const double* in = v.data().data() + k * dim;
    double* o = out.data().data() + k * dim;
    for (std::size_t i = 0; i < dim; ++i) {
      double acc = offset.empty() ? 0.0 : offset[i];
      const double* row = matrix.data() + i * dim;
      for (std::size_t j = 0; j < dim; ++j) acc += row[j] * in[j];
      o[i] = acc;
    }
  }
  return out;
}

double LinearMap::trace_weighted(const Tensor& variance) const {
  if (variance.size() != dim) throw ParameterError("trace_weighted: variance size mismatch");
  double t = 0.0;
  for (std::size_t i = 0; i < dim; ++i) t += matrix[i * dim + i] * variance[i];
  return t;
}

Denoiser linear_denoiser(LinearMap map) {
  return [map = std::move(map)](const Tensor& v) { return map.apply(v); };
}

Denoiser model_denoiser(DenoiserModel model) {
  return [model = std::move(model)](const Tensor& v) { return model.forward(v); };
}

Denoiser pointwise_denoiser(std::function<double(double)> f) {
  return [f = std::move(f)](const Tensor& v) { return map(v, f); };
}

Denoiser constant_denoiser(double value) {
  return [value](const Tensor& v) { return Tensor(v.shape(), value); };
}

Denoiser blend(Denoiser a, Denoiser b, double t) {
  return [a = std::move(a), b = std::move(b), t](const Tensor& v) {
    Tensor out = t * a(v);
    axpy(1.0 - t, b(v), out);
    return out;
  };
}

}  // namespace pld
