// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "pld/rng.hpp"
#include "pld/tensor.hpp"

namespace pld {

/// Random piecewise-constant image plus a linear ramp, values in [0.05, 0.95]:
/// a few half-plane and rectangle regions with their own levels.
Tensor piecewise_image(std::size_t size, SeededRng& rng);

/// `count` piecewise images; image k uses rng.split(k).
std::vector<Tensor> synthetic_corpus(std::size_t count, std::size_t size, const SeededRng& rng);

/// Grid of constant square blocks with levels uniform in [lo, hi]; with
/// `zero_block`, the top-left block is 0.
Tensor block_image(std::size_t height, std::size_t width, std::size_t block, SeededRng& rng, double lo, double hi,
                   bool zero_block = false);

}  // namespace pld
