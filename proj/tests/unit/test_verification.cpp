// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "pld/errors.hpp"
#include "pld/synthetic.hpp"
#include "pld/verification.hpp"

using namespace pld;

namespace {

// E[x | S] for x ~ U[0, lam], counts ~ Pois(s x) per pixel: a ratio of
// regularized lower incomplete gamma functions with a = m s.
double posterior_oracle(double S, double m, double s, double lam) {
  const double a = m * s;
  return (S + 1) / a * boost::math::gamma_p(S + 2, a * lam) / boost::math::gamma_p(S + 1, a * lam);
}

CleanSampler patch_sampler(std::size_t size) {
  return [size](SeededRng& g) { return piecewise_image(size, g); };
}

}  // namespace

TEST_CASE("lmmse oracle") {
  const auto s = lmmse_oracle({0.0}, {1.0}, {1.0});
  CHECK(s.map.matrix[0] == doctest::Approx(0.5));
  const auto id = lmmse_oracle({0.3, 0.1}, {1.0, 0.2, 0.2, 0.5}, {0, 0, 0, 0});
  CHECK(id.map.matrix[0] == doctest::Approx(1.0));
  CHECK(id.map.matrix[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(id.map.offset[0]) < 1e-12);
  CHECK_FALSE(id.regularized);
  CHECK(lmmse_oracle({0.0}, {0.0}, {0.0}).regularized);

  // 4 pixels: no random linear map beats the oracle's MSE.
  SeededRng rng(1);
  std::vector<double> cx(16), cn(16, 0.0);
  std::vector<double> b(16);
  for (double& v : b) v = rng.normal();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double acc = 0;
      for (int k = 0; k < 4; ++k) acc += b[i * 4 + k] * b[j * 4 + k];
      cx[i * 4 + j] = acc;
    }
  for (int i = 0; i < 4; ++i) cn[i * 5] = 0.5;
  const auto o = lmmse_oracle({0, 0, 0, 0}, cx, cn);
  // MSE(K) = tr((K - I) Cx (K - I)^T) + tr(K Cn K^T)
  auto mse = [&](const std::vector<double>& k) {
    double t = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int l = 0; l < 4; ++l) {
          const double a = k[i * 4 + j] - (i == j), c = k[i * 4 + l] - (i == l);
          t += a * cx[j * 4 + l] * c + k[i * 4 + j] * cn[j * 4 + l] * k[i * 4 + l];
        }
    return t;
  };
  const double best = mse(o.map.matrix);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> k = o.map.matrix;
    for (double& v : k) v += rng.normal(0.0, 0.2);
    CHECK(mse(k) >= best);
  }
}

TEST_CASE("prop1 on linear denoisers") {
  SeededRng rng(2);
  const auto spec = NoiseSpec::gaussian(0.1);
  const auto id = check_prop1(linear_denoiser(LinearMap::scaled_identity(16, 1.0)), patch_sampler(4), spec, 1.0, 20000,
                              rng);
  CHECK(id.pass);
  CHECK(id.component("J_hat") == doctest::Approx(4 * 16 * 0.01).epsilon(0.03));
  for (double alpha : {0.25, 0.5, 1.0}) {
    LinearMap m = LinearMap::random(16, rng, 0.5, 0.5);
    m.offset.assign(16, 0.05);
    CHECK(check_prop1(linear_denoiser(m), patch_sampler(4), spec, alpha, 20000, rng.split(7)).pass);
    CHECK(check_prop1(linear_denoiser(m), patch_sampler(4), NoiseSpec::poisson(30), alpha, 20000, rng.split(8)).pass);
  }
  CHECK_THROWS_AS(check_prop1(pointwise_denoiser([](double v) { return std::max(v, 0.0); }), patch_sampler(4), spec,
                              1.0, 100, rng),
                  ContractError);
}

TEST_CASE("remark 2 extra term") {
  SeededRng rng(3);
  const LinearMap m = LinearMap::random(16, rng, 0.3, 0.6);
  for (double beta : {-0.2, 0.2}) {
    const auto spec = NoiseSpec::gaussian(0.1).with_aux_scale(1 + beta);
    const auto r = check_remark2(m, patch_sampler(4), spec, 0.5, 50000, rng.split(1));
    CHECK(r.pass);
    CHECK(r.component("expected_extra") == doctest::Approx(2 * beta * m.trace_weighted(Tensor({16}, 0.01))));
    CHECK(std::abs(r.component("J_minus_MSE_minus_c") - r.component("expected_extra")) <=
          4 * r.component("paired_standard_error"));
  }
}

TEST_CASE("prop2 bound") {
  SeededRng rng(4);
  const auto spec = NoiseSpec::gaussian(0.1);
  const Tensor x = Tensor::image(4, 4);
  const auto lin = check_prop2_bound(linear_denoiser(LinearMap::scaled_identity(16, 0.7)), x, spec, 0.5, 5000, rng);
  CHECK(lin.pass);
  CHECK(lin.component("eps2") <= 1e-10);

  // Rectifier at x = 0: Gaussian noise makes Err vanish in expectation, and
  // eps^2 = m s^2 (1/4 - 1/(2 pi)) with s^2 = sigma^2 (1 + alpha^2).
  const double alpha = 0.5, s2 = 0.01 * (1 + alpha * alpha);
  const auto rect =
      check_prop2_bound(pointwise_denoiser([](double v) { return std::max(v, 0.0); }), x, spec, alpha, 20000, rng);
  CHECK(rect.pass);
  const double eps2 = 16 * s2 * (0.25 - 0.5 / std::numbers::pi);
  CHECK(std::abs(rect.component("eps2") / eps2 - 1) < 0.05);
  const double c = 16 * 0.01 * (1 + 1 / (alpha * alpha));
  CHECK(rect.component("bound") == doctest::Approx(2 * std::sqrt(eps2 * c)).epsilon(0.05));
  CHECK(rect.component("lipschitz_lower_bound") > 0.0);
  CHECK(rect.component("lipschitz_lower_bound") <= 1.0);
}

TEST_CASE("corollary") {
  SeededRng rng(5);
  const auto spec = NoiseSpec::gaussian(0.1);
  const Tensor x = Tensor::image(2, 2, 0.4);
  const Denoiser a = pointwise_denoiser([](double v) { return 0.9 * v; });
  const auto same = check_corollary_delta(a, a, x, spec, 0.5, 1000, rng, 0.0, 0.0);
  CHECK(same.pass);
  CHECK(same.component("lhs") == 0.0);
  CHECK(check_corollary_delta(a, a, x, spec, 0.5, 10, rng, 1.0, 0.0).skipped);

  const auto g = scalar_gain_corollary(0.5, 0.1, 0.5, 100000, rng);
  CHECK(g.pass);
  CHECK(g.component("delta") <= 1e-4);
  CHECK(g.component("slack") > 0.0);
  CHECK(g.component("w_mse") == doctest::Approx(g.component("w_mse_continuous")).epsilon(1e-4));
}

TEST_CASE("constant patch posterior") {
  for (double S : {0.0, 1.0, 7.0, 100.0, 441.0, 900.0, 1800.0})
    for (double lam : {1.0, 2.0, 4.0}) {
      const double v = posterior_mean_from_count(S, 441, 1.0, lam);
      if (boost::math::gamma_p(S + 1, 441 * lam) > 1e-250) {
        CHECK(v == doctest::Approx(posterior_oracle(S, 441, 1.0, lam)).epsilon(1e-9));
      } else {
        // Mass piles up at the upper edge: density ~ exp((S/lam - a)(x - lam)).
        CHECK(v == doctest::Approx(lam - 1 / (S / lam - 441)).epsilon(1e-3));
      }
    }
  CHECK(posterior_mean_from_count(3000.0, 441, 2.0, 4.0) ==
        doctest::Approx(posterior_oracle(3000.0, 441, 2.0, 4.0)).epsilon(1e-9));

  // Concentration near the prior-mean-predicted count for x = lambda/2.
  for (double lam : {1.0, 2.0, 4.0})
    CHECK(std::abs(posterior_mean_from_count(441 * 0.5 * lam, 441, 1.0, lam) / (0.5 * lam) - 1) < 0.02);
  CHECK(posterior_mean_from_count(0.0, 441, 1.0, 1000.0) < 0.01);
  double prev = -1.0;
  for (int S = 0; S < 2000; S += 37) {
    const double v = posterior_mean_from_count(S, 441, 1.0, 4.0);
    CHECK(v >= prev);
    CHECK(v <= 4.0);
    prev = v;
  }
  CHECK_THROWS_AS(posterior_mean_from_count(-1.0, 441, 1.0, 4.0), DomainError);
  const Tensor patch = Tensor::image(21, 21, 2.0);
  CHECK(constant_patch_posterior(1.0, 4.0, patch) == doctest::Approx(posterior_oracle(882, 441, 1, 4)).epsilon(1e-9));
}

TEST_CASE("gradient suite and penalty exactness") {
  for (const auto& r : gradient_suite(7, 2)) {
    INFO(r.name);
    CHECK(r.pass);
  }
  const auto p = penalty_exactness(3, 20);
  CHECK(p.pass);
  CHECK(p.to_json().find("penalty_exactness") != std::string::npos);
}
