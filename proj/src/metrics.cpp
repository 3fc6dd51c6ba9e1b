// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/metrics.hpp"

#include <cmath>
#include <limits>

#include "pld/errors.hpp"

namespace pld {

double psnr(const Tensor& a, const Tensor& b, double peak) {
  require_same_shape(a, b, "psnr");
  if (a.empty()) throw ParameterError("psnr: empty images");
  const double mse = squared_norm(a - b) / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "ssim");
  if (a.rank() != 3 || a.extent(0) != 1) throw ParameterError("ssim: expects single-channel (1,H,W) images");
  constexpr int win = 11;
  const std::size_t h = a.extent(1), w = a.extent(2);
  if (h < win || w < win) throw ParameterError("ssim: images must be at least 11x11");
  double kernel[win];
  double total = 0.0;
  for (int i = 0; i < win; ++i) {
    const double d = i - win / 2;
    kernel[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    total += kernel[i];
  }
  for (double& k : kernel) k /= total;
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r + win <= h; ++r) {
    for (std::size_t c = 0; c + win <= w; ++c) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < win; ++i)
        for (int j = 0; j < win; ++j) {
          const double k = kernel[i] * kernel[j];
          const double va = a[(r + i) * w + c + j], vb = b[(r + i) * w + c + j];
          ma += k * va;
          mb += k * vb;
          saa += k * va * va;
          sbb += k * vb * vb;
          sab += k * va * vb;
        }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      acc += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return acc / static_cast<double>(count);
}

MetricsReport evaluate_pairs(const std::vector<Tensor>& estimates, const std::vector<Tensor>& references) {
  if (estimates.size() != references.size() || estimates.empty())
    throw ParameterError("evaluate_pairs: need equally many, nonzero, images");
  MetricsReport r;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    r.per_image.push_back({psnr(estimates[i], references[i]), ssim(estimates[i], references[i])});
    r.psnr_db += r.per_image.back().psnr_db;
    r.ssim += r.per_image.back().ssim;
  }
  r.psnr_db /= static_cast<double>(estimates.size());
  r.ssim /= static_cast<double>(estimates.size());
  return r;
}

}  // namespace pld
