// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

namespace pld::kernels {

/// Stride-1, zero-padded ("same") 2-D convolution over a batch. Kernel
/// extents must be odd; the output keeps the input's spatial size.
///   input  (batch, in_channels, height, width)
///   weight (out_channels, in_channels, kernel_h, kernel_w)
///   bias   (out_channels) or empty
///   output (batch, out_channels, height, width)
/// This is cross-correlation, as in every deep-learning framework.
struct ConvShape {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;
  std::size_t kernel_h = 3;
  std::size_t kernel_w = 3;

  std::size_t input_size() const { return batch * in_channels * height * width; }
  std::size_t output_size() const { return batch * out_channels * height * width; }
  std::size_t weight_size() const { return out_channels * in_channels * kernel_h * kernel_w; }
};

void validate(const ConvShape& s);

// OpenMP kernels: im2col + GEMM per sample, samples distributed over
// threads. Every output element is produced by one thread in a fixed order
// and the weight-gradient reduction runs over per-sample partials in sample
// order, so results are bitwise independent of the thread count.
void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output);
/// grad_input += d(loss)/d(input)
void conv2d_backward_input(const ConvShape& s, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input);
/// grad_weight += d/dW, grad_bias += d/db (grad_bias may be empty).
void conv2d_backward_weight(const ConvShape& s, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias);

/// Direct seven-loop implementations. Serial, slow, obviously correct; kept
/// as the oracle for the parallel kernels and as the benchmark baseline.
namespace reference {
void conv2d_forward(const ConvShape& s, std::span<const double> input, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> output);
void conv2d_backward_input(const ConvShape& s, std::span<const double> grad_output,
                           std::span<const double> weight, std::span<double> grad_input);
void conv2d_backward_weight(const ConvShape& s, std::span<const double> input,
                            std::span<const double> grad_output, std::span<double> grad_weight,
                            std::span<double> grad_bias);
}  // namespace reference

/// Number of OpenMP threads used by the parallel kernels and Monte-Carlo
/// loops. Values < 1 select 1.
void set_thread_count(int n);
int thread_count();

}  // namespace pld::kernels
