// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0
//
// Serial reference convolution against the OpenMP im2col/GEMM kernels, at
// the training shape (batch 16, 16 channels, 32x32 patches, 3x3 kernels).

#include <benchmark/benchmark.h>

#include <vector>

#include "pld/kernels.hpp"
#include "pld/rng.hpp"

namespace {

using pld::kernels::ConvShape;

struct Fixture {
  explicit Fixture(std::size_t batch) : s{batch, 16, 16, 32, 32, 3, 3} {
    pld::SeededRng rng(1);
    in.resize(s.input_size());
    w.resize(s.weight_size());
    g.resize(s.output_size());
    for (auto& v : in) v = rng.normal();
    for (auto& v : w) v = rng.normal();
    for (auto& v : g) v = rng.normal();
    b.assign(s.out_channels, 0.1);
    out.resize(s.output_size());
    gi.resize(s.input_size());
    gw.resize(s.weight_size());
    gb.resize(s.out_channels);
  }
  ConvShape s;
  std::vector<double> in, w, b, g, out, gi, gw, gb;
};

void BM_ForwardReference(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    pld::kernels::reference::conv2d_forward(f.s, f.in, f.w, f.b, f.out);
    benchmark::DoNotOptimize(f.out.data());
  }
}

void BM_ForwardParallel(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    pld::kernels::conv2d_forward(f.s, f.in, f.w, f.b, f.out);
    benchmark::DoNotOptimize(f.out.data());
  }
}

void BM_BackwardReference(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    pld::kernels::reference::conv2d_backward_input(f.s, f.g, f.w, f.gi);
    pld::kernels::reference::conv2d_backward_weight(f.s, f.in, f.g, f.gw, f.gb);
    benchmark::DoNotOptimize(f.gw.data());
  }
}

void BM_BackwardParallel(benchmark::State& state) {
  Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    pld::kernels::conv2d_backward_input(f.s, f.g, f.w, f.gi);
    pld::kernels::conv2d_backward_weight(f.s, f.in, f.g, f.gw, f.gb);
    benchmark::DoNotOptimize(f.gw.data());
  }
}

}  // namespace

BENCHMARK(BM_ForwardReference)->Arg(1)->Arg(16);
BENCHMARK(BM_ForwardParallel)->Arg(1)->Arg(16);
BENCHMARK(BM_BackwardReference)->Arg(1)->Arg(16);
BENCHMARK(BM_BackwardParallel)->Arg(1)->Arg(16);

BENCHMARK_MAIN();
