// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "pld/decomposition.hpp"
#include "pld/errors.hpp"

using namespace pld;

namespace {

Tensor ramp(std::size_t h, std::size_t w) {
  Tensor x = Tensor::image(h, w);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.2 + 0.6 * static_cast<double>(i) / static_cast<double>(x.size());
  return x;
}

// Per-pixel residual variance of max(0, v), v ~ N(0, s^2), after removing
// the best affine fit in v; moments by quadrature.
double rectifier_eps2(double s) {
  using boost::math::quadrature::gauss_kronrod;
  auto phi = [s](double v) { return std::exp(-0.5 * v * v / (s * s)) / (s * std::sqrt(2 * std::numbers::pi)); };
  const double hi = 12 * s;
  const double m1 = gauss_kronrod<double, 61>::integrate([&](double v) { return v * phi(v); }, 0.0, hi);
  const double m2 = gauss_kronrod<double, 61>::integrate([&](double v) { return v * v * phi(v); }, 0.0, hi);
  // E[R v] = E[R^2] = m2 for R = max(0, v).
  const double slope = m2 / (s * s);
  return m2 - m1 * m1 - slope * slope * s * s;
}

}  // namespace

TEST_CASE("estimate_g") {
  SeededRng rng(1);
  const Tensor x = ramp(4, 4);
  const auto spec = NoiseSpec::gaussian(0.1);
  const GEstimate gi = estimate_g(linear_denoiser(LinearMap::scaled_identity(16, 1.0)), x, spec, 0.5, 2000, rng);
  const GEstimate g7 = estimate_g(linear_denoiser(LinearMap::scaled_identity(16, 0.7)), x, spec, 0.5, 2000, rng);
  for (std::size_t i = 0; i < 16; ++i) {
    CHECK(std::abs(gi.mean[i] - x[i]) <= 4 * gi.standard_error[i]);
    CHECK(std::abs(g7.mean[i] - 0.7 * x[i]) <= 4 * g7.standard_error[i]);
  }
  const GEstimate gc = estimate_g(constant_denoiser(0.1), x, spec, 0.5, 100, rng);
  CHECK(gc.mean == Tensor(x.shape(), 0.1));
  CHECK_THROWS_AS(estimate_g(constant_denoiser(0.1), x, spec, 0.5, 99, rng), ParameterError);
}

TEST_CASE("fit_L on linear and constant denoisers") {
  SeededRng rng(2);
  const Tensor x = ramp(4, 4);
  const auto spec = NoiseSpec::gaussian(0.1);
  const Denoiser lin = linear_denoiser(LinearMap::scaled_identity(16, 0.7));
  const LinearPart L = fit_L(lin, x, 0.7 * x, spec, 1.0, 160, rng, LMode::full);
  double err = 0.0;
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j) err = std::max(err, std::abs(L.at(i, j) - (i == j ? 0.7 : 0.0)));
  CHECK(err <= 1e-2);

  const LinearPart Lc = fit_L(constant_denoiser(0.3), x, Tensor(x.shape(), 0.3), spec, 1.0, 160, rng, LMode::full);
  for (double v : Lc.values) CHECK(v == 0.0);

  CHECK_THROWS_AS(fit_L(lin, x, x, spec, 1.0, 31, rng, LMode::full), ContractError);
  CHECK_THROWS_AS(fit_L(lin, Tensor::image(65, 64), Tensor::image(65, 64), spec, 1.0, 100000, rng, LMode::full),
                  ContractError);
}

TEST_CASE("residual_stats on linear denoisers") {
  SeededRng rng(3);
  const Tensor x = ramp(4, 4);
  for (double alpha : {0.0, 0.5, 1.0}) {
    DecompositionOptions full{LMode::full, kDefaultRidge, 3};
    const auto d = residual_stats(linear_denoiser(LinearMap::scaled_identity(16, 0.7)), x, NoiseSpec::gaussian(0.1),
                                  alpha, 160, rng, full);
    CHECK(d.eps2_per_pixel <= 1e-8);
    CHECK(d.eps2_per_pixel >= 0.0);
    const auto di = residual_stats(linear_denoiser(LinearMap::scaled_identity(16, 1.0)), x,
                                   NoiseSpec::gaussian(0.1), alpha, 500, rng);
    CHECK(di.eps2_per_pixel <= 1e-8);
    for (std::size_t i = 0; i < 16; ++i) CHECK(di.g_of_x[i] == doctest::Approx(x[i]).epsilon(1e-9));
    // Bookkeeping identity g + L n_hat + e = R(y_hat).
    REQUIRE(d.residual_samples.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      const Tensor rebuilt = d.g_of_x + d.L.apply(d.retained_n_hat[k]) + d.residual_samples[k];
      for (std::size_t i = 0; i < 16; ++i) CHECK(rebuilt[i] == doctest::Approx(d.retained_output[k][i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("rectifier residual matches quadrature") {
  SeededRng rng(4);
  const double sigma = 0.1, alpha = 0.5;
  const Tensor x = Tensor::image(8, 8);
  const auto d = residual_stats(pointwise_denoiser([](double v) { return std::max(v, 0.0); }), x,
                                NoiseSpec::gaussian(sigma), alpha, 20000, rng);
  const double s = sigma * std::sqrt(1 + alpha * alpha);
  const double oracle = rectifier_eps2(s);
  CHECK(oracle == doctest::Approx(s * s * (0.25 - 0.5 / std::numbers::pi)).epsilon(1e-10));
  CHECK(std::abs(d.eps2_per_pixel / oracle - 1) < 0.05);
  for (std::size_t i = 0; i < 64; ++i) {
    CHECK(std::abs(d.residual_mean[i]) <= 4 * d.residual_standard_error[i] + 1e-15);
    CHECK(d.L.at(i, i) == doctest::Approx(0.5).epsilon(0.05));
  }
}

TEST_CASE("residual variance properties") {
  SeededRng rng(5);
  const Tensor x = ramp(3, 3);
  const auto spec = NoiseSpec::gaussian(0.2);
  const Denoiser a = pointwise_denoiser([](double v) { return std::max(v, 0.4); });
  const Denoiser b = pointwise_denoiser([](double v) { return std::tanh(3 * v); });
  DecompositionOptions full{LMode::full, kDefaultRidge, 0};
  const double ea = residual_stats(a, x, spec, 1.0, 4000, rng, full).eps2_per_pixel;
  const double eb = residual_stats(b, x, spec, 1.0, 4000, rng, full).eps2_per_pixel;
  const auto dm = residual_stats(blend(a, b, 0.3), x, spec, 1.0, 4000, rng, full);
  CHECK(dm.eps2_per_pixel <= std::max(ea, eb) + 4 * dm.eps2_standard_error);

  // Perturbing the fitted L cannot lower the in-sample residual.
  DecompositionOptions keep{LMode::full, kDefaultRidge, 4000};
  const auto d = residual_stats(a, x, spec, 1.0, 4000, rng, keep);
  SeededRng prng(6);
  for (int t = 0; t < 5; ++t) {
    LinearPart L2 = d.L;
    for (double& v : L2.values) v += prng.normal(0.0, 0.05);
    double rss = 0.0, rss2 = 0.0;
    for (std::size_t k = 0; k < 4000; ++k) {
      const Tensor e2 = d.retained_output[k] - d.g_of_x - L2.apply(d.retained_n_hat[k]);
      rss += squared_norm(d.residual_samples[k]);
      rss2 += squared_norm(e2);
    }
    CHECK(rss2 >= rss);
  }
}

TEST_CASE("zLz statistic") {
  SeededRng rng(7);
  const Tensor x = Tensor::image(5, 5, 0.5);
  const double s = 0.1;
  const double v = zLz_statistic(linear_denoiser(LinearMap::scaled_identity(25, 0.7)), x, NoiseSpec::gaussian(s), 1.0,
                                 500, rng);
  CHECK(v == doctest::Approx(0.7 * 25 * s * s).epsilon(1e-6));
  CHECK(zLz_statistic(constant_denoiser(0.2), x, NoiseSpec::gaussian(s), 1.0, 500, rng) == 0.0);
  CHECK_THROWS_AS(zLz_statistic(constant_denoiser(0.2), ramp(5, 5), NoiseSpec::gaussian(s), 1.0, 500, rng),
                  ParameterError);
}

TEST_CASE("scatter export") {
  SeededRng rng(8);
  const Tensor x = ramp(4, 4);
  const auto spec = NoiseSpec::gaussian(0.1);
  const Denoiser lin = linear_denoiser(LinearMap::scaled_identity(16, 0.7));
  const auto d = residual_stats(lin, x, spec, 0.5, 200, rng);
  const auto sc = export_scatter(lin, x, d, 5, spec, 0.5, 300, rng);
  CHECK(sc.pairs.size() == 300);
  for (auto [a, b] : sc.pairs) CHECK(std::abs(a - b) <= 1e-8);

  const Denoiser c = constant_denoiser(0.25);
  const auto dc = residual_stats(c, x, spec, 0.5, 200, rng);
  for (auto [a, b] : export_scatter(c, x, dc, 3, spec, 0.5, 50, rng).pairs) {
    CHECK(a == 0.0);
    CHECK(b == 0.0);
  }

  const auto path = std::filesystem::temp_directory_path() / "pld_scatter.csv";
  write_scatter_csv(path, sc, true);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header == "Ln_hat_i,R_minus_g_i,reference");
  CHECK(decomposition_report_json(d, 0.5).find("\"zLz\": 0.5") != std::string::npos);
}

TEST_CASE("decomposition is deterministic across thread counts") {
  const Tensor x = ramp(4, 4);
  const Denoiser r = pointwise_denoiser([](double v) { return std::max(v, 0.5); });
  const auto a = residual_stats(r, x, NoiseSpec::gaussian(0.1), 0.5, 1000, SeededRng(9));
  const auto b = residual_stats(r, x, NoiseSpec::gaussian(0.1), 0.5, 1000, SeededRng(9));
  CHECK(a.eps2_per_pixel == b.eps2_per_pixel);
  CHECK(a.g_of_x == b.g_of_x);
}
