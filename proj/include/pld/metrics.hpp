// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "pld/tensor.hpp"

namespace pld {

/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

/// Single-channel SSIM: 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, dynamic range 1, averaged over all fully contained windows.
double ssim(const Tensor& a, const Tensor& b);

struct MetricsReport {
  double psnr_db = 0.0;
  double ssim = 0.0;
  struct Item {
    double psnr_db;
    double ssim;
  };
  std::vector<Item> per_image;
};

/// Mean PSNR and SSIM over image pairs.
MetricsReport evaluate_pairs(const std::vector<Tensor>& estimates, const std::vector<Tensor>& references);

}  // namespace pld
