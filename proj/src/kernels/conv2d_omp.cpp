// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include <omp.h>

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#include "pld/kernels.hpp"
#include "pld/tensor.hpp"

namespace pld::kernels {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;
using RowMap = Eigen::Map<RowMatrix>;

int g_threads = 1;

// Rows are (channel, ky, kx), columns are output pixels (y, x).
void im2col(const ConvShape& s, const double* image, RowMatrix& col) {
  const std::size_t hw = s.height * s.width;
  const auto ph = static_cast<std::ptrdiff_t>(s.kernel_h / 2);
  const auto pw = static_cast<std::ptrdiff_t>(s.kernel_w / 2);
  const auto H = static_cast<std::ptrdiff_t>(s.height);
  const auto W = static_cast<std::ptrdiff_t>(s.width);
  std::size_t row = 0;
  for (std::size_t c = 0; c < s.in_channels; ++c) {
    const double* plane = image + c * hw;
    for (std::size_t ky = 0; ky < s.kernel_h; ++ky)
      for (std::size_t kx = 0; kx < s.kernel_w; ++kx, ++row) {
        double* dst = col.data() + row * hw;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - ph;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pw;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
        for (std::ptrdiff_t y = 0; y < H; ++y) {
          double* out = dst + y * W;
          const std::ptrdiff_t iy = y + dy;
          if (iy < 0 || iy >= H || x0 >= x1) {
            std::fill(out, out + W, 0.0);
            continue;
          }
          std::fill(out, out + x0, 0.0);
          const double* src = plane + iy * W + dx;
          std::copy(src + x0, src + x1, out + x0);
          std::fill(out + x1, out + W, 0.0);
        }
      }
  }
}

void col2im_add(const ConvShape& s, const RowMatrix& col, double* image) {
  const std::size_t hw = s.height * s.width;
  const auto ph = static_cast<std::ptrdiff_t>(s.kernel_h / 2);
  const auto pw = static_cast<std::ptrdiff_t>(s.kernel_w / 2);
  const auto H = static_cast<std::ptrdiff_t>(s.height);
  const auto W = static_cast<std::ptrdiff_t>(s.width);
  std::size_t row = 0;
  for (std::size_t c = 0; c < s.in_channels; ++c) {
    double* plane = image + c * hw;
    for (std::size_t ky = 0; ky < s.kernel_h; ++ky)
      for (std::size_t kx = 0; kx < s.kernel_w; ++kx, ++row) {
        const double* src = col.data() + row * hw;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - ph;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pw;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
        for (std::ptrdiff_t y = 0; y < H; ++y) {
          const std::ptrdiff_t iy = y + dy;
          if (iy < 0 || iy >= H) continue;
          double* dst = plane + iy * W + dx;
          const double* in = src + y * W;
          for (std::ptrdiff_t x = x0; x < x1; ++x) dst[x] += in[x];
        }
      }
  }
}

std::size_t col_rows(const ConvShape& s) { return s.in_channels * s.kernel_h * s.kernel_w; }

}  // namespace

void set_thread_count(int n) {
  g_threads = std::max(1, n);
  omp_set_num_threads(g_threads);
}

int thread_count() { return g_threads; }

void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output) {
  validate(s);
  const auto K = static_cast<Eigen::Index>(col_rows(s));
  const auto P = static_cast<Eigen::Index>(s.height * s.width);
  const auto O = static_cast<Eigen::Index>(s.out_channels);
  const ConstRowMap w(weight.data(), O, K);
  const std::ptrdiff_t batch = static_cast<std::ptrdiff_t>(s.batch);
#pragma omp parallel num_threads(g_threads)
  {
    RowMatrix col(K, P);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      im2col(s, input.data() + static_cast<std::size_t>(n) * s.in_channels * P, col);
      RowMap out(output.data() + static_cast<std::size_t>(n) * O * P, O, P);
      out.noalias() = w * col;
      if (!bias.empty())
        for (Eigen::Index o = 0; o < O; ++o) out.row(o).array() += bias[static_cast<std::size_t>(o)];
    }
  }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input) {
  validate(s);
  const auto K = static_cast<Eigen::Index>(col_rows(s));
  const auto P = static_cast<Eigen::Index>(s.height * s.width);
  const auto O = static_cast<Eigen::Index>(s.out_channels);
  const ConstRowMap w(weight.data(), O, K);
  const std::ptrdiff_t batch = static_cast<std::ptrdiff_t>(s.batch);
#pragma omp parallel num_threads(g_threads)
  {
    RowMatrix dcol(K, P);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      const ConstRowMap g(grad_output.data() + static_cast<std::size_t>(n) * O * P, O, P);
      dcol.noalias() = w.transpose() * g;
      col2im_add(s, dcol, grad_input.data() + static_cast<std::size_t>(n) * s.in_channels * P);
    }
  }
}

void conv2d_backward_weight(const ConvShape& s, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias) {
  validate(s);
  const auto K = static_cast<Eigen::Index>(col_rows(s));
  const auto P = static_cast<Eigen::Index>(s.height * s.width);
  const auto O = static_cast<Eigen::Index>(s.out_channels);
  const std::ptrdiff_t batch = static_cast<std::ptrdiff_t>(s.batch);
  const std::size_t wsize = static_cast<std::size_t>(O * K);
  pld::TensorStorage partial_w(static_cast<std::size_t>(batch) * wsize);
  pld::TensorStorage partial_b(static_cast<std::size_t>(batch) * static_cast<std::size_t>(O));
#pragma omp parallel num_threads(g_threads)
  {
    RowMatrix col(K, P);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < batch; ++n) {
      const auto un = static_cast<std::size_t>(n);
      im2col(s, input.data() + un * s.in_channels * P, col);
      const ConstRowMap g(grad_output.data() + un * O * P, O, P);
      RowMap pw(partial_w.data() + un * wsize, O, K);
      pw.noalias() = g * col.transpose();
      for (Eigen::Index o = 0; o < O; ++o) partial_b[un * O + o] = g.row(o).sum();
    }
  }
  for (std::size_t n = 0; n < static_cast<std::size_t>(batch); ++n) {
    const double* pw = partial_w.data() + n * wsize;
    for (std::size_t i = 0; i < wsize; ++i) grad_weight[i] += pw[i];
    if (!grad_bias.empty())
      for (std::size_t o = 0; o < static_cast<std::size_t>(O); ++o) grad_bias[o] += partial_b[n * O + o];
  }
}

}  // namespace pld::kernels
