// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pld/errors.hpp"

namespace pld {

Tensor piecewise_image(std::size_t size, SeededRng& rng) {
  if (size == 0) throw ParameterError("piecewise_image: size must be positive");
  const double n = static_cast<double>(size);
  Tensor img = Tensor::image(size, size, rng.uniform(0.2, 0.8));
  // Half-planes.
  const std::size_t planes = 1 + rng.below(2);
  for (std::size_t p = 0; p < planes; ++p) {
    const double theta = rng.uniform(0.0, 2 * std::numbers::pi);
    const double cx = rng.uniform(0.25, 0.75) * n, cy = rng.uniform(0.25, 0.75) * n;
    const double level = rng.uniform(0.1, 0.9);
    for (std::size_t r = 0; r < size; ++r)
      for (std::size_t c = 0; c < size; ++c)
        if ((static_cast<double>(c) - cx) * std::cos(theta) + (static_cast<double>(r) - cy) * std::sin(theta) > 0)
          img[r * size + c] = level;
  }
  // Rectangles.
  const std::size_t rects = 1 + rng.below(3);
  for (std::size_t q = 0; q < rects; ++q) {
    const std::size_t h = 2 + rng.below(std::max<std::size_t>(size / 2, 1));
    const std::size_t w = 2 + rng.below(std::max<std::size_t>(size / 2, 1));
    const std::size_t top = rng.below(size), left = rng.below(size);
    const double level = rng.uniform(0.1, 0.9);
    for (std::size_t r = top; r < std::min(size, top + h); ++r)
      for (std::size_t c = left; c < std::min(size, left + w); ++c) img[r * size + c] = level;
  }
  // Ramp.
  const double gx = rng.uniform(-0.15, 0.15), gy = rng.uniform(-0.15, 0.15);
  for (std::size_t r = 0; r < size; ++r)
    for (std::size_t c = 0; c < size; ++c) {
      const double v = img[r * size + c] + gx * (static_cast<double>(c) / n - 0.5) + gy * (static_cast<double>(r) / n - 0.5);
      img[r * size + c] = std::clamp(v, 0.05, 0.95);
    }
  return img;
}

std::vector<Tensor> synthetic_corpus(std::size_t count, std::size_t size, const SeededRng& rng) {
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    SeededRng g = rng.split(k);
    out.push_back(piecewise_image(size, g));
  }
  return out;
}

Tensor block_image(std::size_t height, std::size_t width, std::size_t block, SeededRng& rng, double lo, double hi,
                   bool zero_block) {
  if (block == 0) throw ParameterError("block_image: block must be positive");
  Tensor img = Tensor::image(height, width);
  const std::size_t rows = (height + block - 1) / block, cols = (width + block - 1) / block;
  for (std::size_t br = 0; br < rows; ++br)
    for (std::size_t bc = 0; bc < cols; ++bc) {
      const double level = zero_block && br == 0 && bc == 0 ? 0.0 : rng.uniform(lo, hi);
      for (std::size_t r = br * block; r < std::min(height, (br + 1) * block); ++r)
        for (std::size_t c = bc * block; c < std::min(width, (bc + 1) * block); ++c) img[r * width + c] = level;
    }
  return img;
}

}  // namespace pld
