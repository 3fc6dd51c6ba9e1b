// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pld/verification.hpp"

namespace pld {

/// A named group of checks run from one seed.
struct SuiteResult {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<PropCheckReport> reports;

  /// Every non-skipped report passed (and at least one ran).
  bool pass() const;
  std::string to_json() const;
};

/// 20 random linear maps on 8x8 piecewise patches, Gaussian sigma 0.1,
/// alpha in {0.25, 1}.
SuiteResult prop1_suite(std::uint64_t seed, std::size_t maps = 20, std::size_t N = 100000);
/// Auxiliary variance scaled by 1 + beta, beta = +-0.2, for a known random L.
SuiteResult remark2_suite(std::uint64_t seed, std::size_t N = 100000);
/// Error bound for a linear map and for the rectifier.
SuiteResult prop2_suite(std::uint64_t seed, std::size_t N = 20000);
/// L recovery for R(v) = 0.7 v and rectifier residual against quadrature.
SuiteResult decomposition_suite(std::uint64_t seed);
/// Scalar-gain family bound.
SuiteResult corollary_suite(std::uint64_t seed, std::size_t N = 100000);
/// Constant-patch Poisson posterior mean at lambda in {1, 2, 4}; scatter CSVs
/// go to out_dir when non-empty.
SuiteResult example1_suite(std::uint64_t seed, const std::filesystem::path& out_dir = {}, std::size_t N = 5000);
/// Finite-difference checks of every loss plus penalty exactness.
SuiteResult gradients_suite(std::uint64_t seed);

/// Per-pixel residual variance of max(0, v) for v ~ N(0, s^2) after the best
/// affine fit, by quadrature.
double rectifier_residual_oracle(double s);

const std::vector<std::string>& suite_names();
/// Runs one named suite; "all" is not accepted here.
SuiteResult run_suite(const std::string& name, std::uint64_t seed, const std::filesystem::path& out_dir = {});

}  // namespace pld
