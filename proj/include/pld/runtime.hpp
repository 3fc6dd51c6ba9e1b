// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

namespace pld {

/// Sets the OpenMP thread count from `requested`, else from PLD_THREADS, else
/// leaves the OpenMP default. Returns the count in effect. One thread gives
/// bit-exact reproducibility.
int configure_threads(std::optional<int> requested = std::nullopt);

/// Keeps large freed buffers on the heap instead of unmapping them, which
/// removes most page-fault traffic in training loops.
void tune_allocator();

}  // namespace pld
