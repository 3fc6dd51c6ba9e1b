// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/montecarlo.hpp"

#include <algorithm>

#include "pld/errors.hpp"
#include "pld/kernels.hpp"

namespace pld {

CleanSampler fixed_image(Tensor x) {
  return [x = std::move(x)](SeededRng&) { return x; };
}

Realizations realize(const Denoiser& denoiser, const CleanSampler& clean, const NoiseSpec& spec, double alpha,
                     const SeededRng& rng, std::size_t first, std::size_t count) {
  if (count == 0) throw ParameterError("realize: empty chunk");
  SeededRng probe = rng.split(first);
  const Tensor x0 = clean(probe);
  if (x0.rank() != 3) throw ParameterError("realize: clean images must be (C,H,W)");
  Shape shape = x0.shape();
  shape.insert(shape.begin(), count);
  Realizations r{Tensor(shape), Tensor(shape), Tensor(shape), Tensor(shape), Tensor(shape), {}};
  const std::size_t m = x0.size();
  bool failed = false;
#pragma omp parallel for schedule(static) num_threads(kernels::thread_count())
  for (std::size_t k = 0; k < count; ++k) {
    try {
      SeededRng g = rng.split(first + k);
      const Tensor x = clean(g);
      const Tensor n = sample_noise(spec, x, g);
      const Tensor y = x + n;
      Tensor z = alpha != 0.0 ? sample_auxiliary(spec, y, g) : Tensor(x.shape());
      std::copy_n(x.data().begin(), m, r.x.data().begin() + k * m);
      std::copy_n(n.data().begin(), m, r.n.data().begin() + k * m);
      std::copy_n(z.data().begin(), m, r.z.data().begin() + k * m);
      for (std::size_t i = 0; i < m; ++i) {
        r.y_hat[k * m + i] = y[i] + alpha * z[i];
        r.n_hat[k * m + i] = n[i] + alpha * z[i];
      }
    } catch (...) {
#pragma omp atomic write
      failed = true;
    }
  }
  if (failed) {
    // Re-run the first failing draw serially to surface its exception.
    for (std::size_t k = 0; k < count; ++k) {
      SeededRng g = rng.split(first + k);
      const Tensor x = clean(g);
      const Tensor y = x + sample_noise(spec, x, g);
      if (alpha != 0.0) sample_auxiliary(spec, y, g);
    }
    throw NumericalError("realize: sampling failed");
  }
  r.out = denoiser(r.y_hat);
  require_same_shape(r.out, r.y_hat, "denoiser output");
  return r;
}

std::size_t chunk_length(std::size_t pixels) {
  return std::clamp<std::size_t>((std::size_t{1} << 18) / std::max<std::size_t>(pixels, 1), 1, 4096);
}

}  // namespace pld
