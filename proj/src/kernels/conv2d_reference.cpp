// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/kernels.hpp"

#include <string>

#include "pld/errors.hpp"

namespace pld::kernels {

void validate(const ConvShape& s) {
  if (s.kernel_h % 2 == 0 || s.kernel_w % 2 == 0)
    throw ParameterError("conv2d: kernel extents must be odd, got " + std::to_string(s.kernel_h) + "x" +
                         std::to_string(s.kernel_w));
  if (s.batch == 0 || s.in_channels == 0 || s.out_channels == 0 || s.height == 0 || s.width == 0)
    throw ParameterError("conv2d: empty extent");
}

namespace reference {

namespace {

inline bool inside(std::ptrdiff_t y, std::ptrdiff_t x, const ConvShape& s) {
  return y >= 0 && x >= 0 && y < static_cast<std::ptrdiff_t>(s.height) &&
         x < static_cast<std::ptrdiff_t>(s.width);
}

inline std::size_t in_index(const ConvShape& s, std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
  return ((n * s.in_channels + c) * s.height + y) * s.width + x;
}

inline std::size_t out_index(const ConvShape& s, std::size_t n, std::size_t o, std::size_t y, std::size_t x) {
  return ((n * s.out_channels + o) * s.height + y) * s.width + x;
}

inline std::size_t w_index(const ConvShape& s, std::size_t o, std::size_t c, std::size_t ky, std::size_t kx) {
  return ((o * s.in_channels + c) * s.kernel_h + ky) * s.kernel_w + kx;
}

}  // namespace

void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output) {
  validate(s);
  const auto ph = static_cast<std::ptrdiff_t>(s.kernel_h / 2);
  const auto pw = static_cast<std::ptrdiff_t>(s.kernel_w / 2);
  for (std::size_t n = 0; n < s.batch; ++n)
    for (std::size_t o = 0; o < s.out_channels; ++o)
      for (std::size_t y = 0; y < s.height; ++y)
        for (std::size_t x = 0; x < s.width; ++x) {
          double acc = bias.empty() ? 0.0 : bias[o];
          for (std::size_t c = 0; c < s.in_channels; ++c)
            for (std::size_t ky = 0; ky < s.kernel_h; ++ky)
              for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
                const auto iy = static_cast<std::ptrdiff_t>(y + ky) - ph;
                const auto ix = static_cast<std::ptrdiff_t>(x + kx) - pw;
                if (!inside(iy, ix, s)) continue;
                acc += weight[w_index(s, o, c, ky, kx)] *
                       input[in_index(s, n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix))];
              }
          output[out_index(s, n, o, y, x)] = acc;
        }
}

void conv2d_backward_input(const ConvShape& s, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input) {
  validate(s);
  const auto ph = static_cast<std::ptrdiff_t>(s.kernel_h / 2);
  const auto pw = static_cast<std::ptrdiff_t>(s.kernel_w / 2);
  for (std::size_t n = 0; n < s.batch; ++n)
    for (std::size_t o = 0; o < s.out_channels; ++o)
      for (std::size_t y = 0; y < s.height; ++y)
        for (std::size_t x = 0; x < s.width; ++x) {
          const double g = grad_output[out_index(s, n, o, y, x)];
          for (std::size_t c = 0; c < s.in_channels; ++c)
            for (std::size_t ky = 0; ky < s.kernel_h; ++ky)
              for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
                const auto iy = static_cast<std::ptrdiff_t>(y + ky) - ph;
                const auto ix = static_cast<std::ptrdiff_t>(x + kx) - pw;
                if (!inside(iy, ix, s)) continue;
                grad_input[in_index(s, n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix))] +=
                    g * weight[w_index(s, o, c, ky, kx)];
              }
        }
}

void conv2d_backward_weight(const ConvShape& s, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias) {
  validate(s);
  const auto ph = static_cast<std::ptrdiff_t>(s.kernel_h / 2);
  const auto pw = static_cast<std::ptrdiff_t>(s.kernel_w / 2);
  for (std::size_t n = 0; n < s.batch; ++n)
    for (std::size_t o = 0; o < s.out_channels; ++o)
      for (std::size_t y = 0; y < s.height; ++y)
        for (std::size_t x = 0; x < s.width; ++x) {
          const double g = grad_output[out_index(s, n, o, y, x)];
          if (!grad_bias.empty()) grad_bias[o] += g;
          for (std::size_t c = 0; c < s.in_channels; ++c)
            for (std::size_t ky = 0; ky < s.kernel_h; ++ky)
              for (std::size_t kx = 0; kx < s.kernel_w; ++kx) {
                const auto iy = static_cast<std::ptrdiff_t>(y + ky) - ph;
                const auto ix = static_cast<std::ptrdiff_t>(x + kx) - pw;
                if (!inside(iy, ix, s)) continue;
                grad_weight[w_index(s, o, c, ky, kx)] +=
                    g * input[in_index(s, n, c, static_cast<std::size_t>(iy), static_cast<std::size_t>(ix))];
              }
        }
}

}  // namespace reference
}  // namespace pld::kernels
