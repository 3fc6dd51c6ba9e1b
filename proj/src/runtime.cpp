// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/runtime.hpp"

#include <malloc.h>
#include <omp.h>

#include <cstdlib>
#include <string>

#include "pld/errors.hpp"

namespace pld {

int configure_threads(std::optional<int> requested) {
  int n = 0;
  if (requested) {
    n = *requested;
  } else if (const char* env = std::getenv("PLD_THREADS"); env && *env) {
    try {
      std::size_t used = 0;
      n = std::stoi(env, &used);
      if (env[used] != '\0') n = -1;
    } catch (const std::exception&) {
      n = -1;
    }
    if (n <= 0) throw ParameterError(std::string("PLD_THREADS must be a positive integer, got '") + env + "'");
  }
  if (requested && n <= 0) throw ParameterError("thread count must be positive");
  if (n > 0) omp_set_num_threads(n);
  return omp_get_max_threads();
}

void tune_allocator() {
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
}

}  // namespace pld
