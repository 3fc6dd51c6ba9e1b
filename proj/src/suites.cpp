// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/suites.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "json.hpp"
#include "pld/decomposition.hpp"
#include "pld/denoiser.hpp"
#include "pld/errors.hpp"
#include "pld/montecarlo.hpp"
#include "pld/synthetic.hpp"

namespace pld {

bool SuiteResult::pass() const {
  bool any = false;
  for (const auto& r : reports) {
    if (r.skipped) continue;
    any = true;
    if (!r.pass) return false;
  }
  return any;
}

std::string SuiteResult::to_json() const {
  nlohmann::json j;
  j["suite"] = name;
  j["seed"] = seed;
  j["pass"] = pass();
  j["reports"] = nlohmann::json::array();
  for (const auto& r : reports) j["reports"].push_back(nlohmann::json::parse(r.to_json()));
  return j.dump(2);
}

namespace {

CleanSampler piecewise_sampler(std::size_t size) {
  return [size](SeededRng& g) { return piecewise_image(size, g); };
}

}  // namespace

SuiteResult prop1_suite(std::uint64_t seed, std::size_t maps, std::size_t N) {
  SuiteResult s{"prop1", seed, {}};
  const SeededRng root(seed);
  const auto spec = NoiseSpec::gaussian(0.1);
  for (std::size_t k = 0; k < maps; ++k) {
    SeededRng mr = root.split(2 * k);
    const LinearMap m = LinearMap::random(64, mr, 0.5, 0.5);
    for (double alpha : {0.25, 1.0}) {
      auto r = check_prop1(linear_denoiser(m), piecewise_sampler(8), spec, alpha, N,
                           root.split(2 * k + 1).split(alpha == 1.0 ? 1 : 0));
      r.name = "prop1_map" + std::to_string(k) + (alpha == 1.0 ? "_alpha1" : "_alpha0.25");
      s.reports.push_back(std::move(r));
    }
  }
  return s;
}

SuiteResult remark2_suite(std::uint64_t seed, std::size_t N) {
  SuiteResult s{"remark2", seed, {}};
  const SeededRng root(seed);
  SeededRng mr = root.split(0);
  const LinearMap m = LinearMap::random(64, mr, 0.3, 0.6);
  for (double beta : {-0.2, 0.2}) {
    auto r = check_remark2(m, piecewise_sampler(8), NoiseSpec::gaussian(0.1).with_aux_scale(1 + beta), 0.5, N,
                           root.split(beta < 0 ? 1 : 2));
    r.name = beta < 0 ? "remark2_beta-0.2" : "remark2_beta+0.2";
    s.reports.push_back(std::move(r));
  }
  return s;
}

SuiteResult prop2_suite(std::uint64_t seed, std::size_t N) {
  SuiteResult s{"prop2", seed, {}};
  const SeededRng root(seed);
  const auto spec = NoiseSpec::gaussian(0.1);
  const Tensor x = Tensor::image(4, 4);
  auto lin = check_prop2_bound(linear_denoiser(LinearMap::scaled_identity(16, 0.7)), x, spec, 0.5, N, root.split(0));
  lin.name = "prop2_linear";
  s.reports.push_back(std::move(lin));
  auto rect = check_prop2_bound(pointwise_denoiser([](double v) { return std::max(v, 0.0); }), x, spec, 0.5, N,
                                root.split(1));
  rect.name = "prop2_rectifier";
  s.reports.push_back(std::move(rect));
  return s;
}

double rectifier_residual_oracle(double s) {
  using boost::math::quadrature::gauss_kronrod;
  auto phi = [s](double v) { return std::exp(-0.5 * v * v / (s * s)) / (s * std::sqrt(2 * std::numbers::pi)); };
  const double hi = 12 * s;
  const double m1 = gauss_kronrod<double, 61>::integrate([&](double v) { return v * phi(v); }, 0.0, hi);
  const double m2 = gauss_kronrod<double, 61>::integrate([&](double v) { return v * v * phi(v); }, 0.0, hi);
  // Best affine fit of max(0, v) on v has slope E[v max(0,v)] / s^2 = m2 / s^2.
  const double slope = m2 / (s * s);
  return m2 - m1 * m1 - slope * slope * s * s;
}

SuiteResult decomposition_suite(std::uint64_t seed) {
  SuiteResult s{"decomposition", seed, {}};
  const SeededRng root(seed);
  const auto spec = NoiseSpec::gaussian(0.1);
  {
    SeededRng xr = root.split(0);
    const Tensor x = piecewise_image(8, xr);
    const std::size_t m = x.size();
    const auto d = residual_stats(linear_denoiser(LinearMap::scaled_identity(m, 0.7)), x, spec, 0.5, 10 * m,
                                  root.split(1), {LMode::full});
    double err = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) err = std::max(err, std::abs(d.L.at(i, j) - (i == j ? 0.7 : 0.0)));
    PropCheckReport r;
    r.name = "decomposition_linear";
    r.statistic = err;
    r.tolerance = 1e-2;
    r.sample_count = d.sample_count;
    r.set("L_max_error", err);
    r.set("eps2_per_pixel", d.eps2_per_pixel);
    r.pass = err <= 1e-2 && d.eps2_per_pixel <= 1e-8;
    s.reports.push_back(std::move(r));
  }
  {
    const double sigma = 0.1, alpha = 0.5;
    const Tensor x = Tensor::image(8, 8);
    const auto d = residual_stats(pointwise_denoiser([](double v) { return std::max(v, 0.0); }), x,
                                  NoiseSpec::gaussian(sigma), alpha, 20000, root.split(2));
    const double oracle = rectifier_residual_oracle(sigma * std::sqrt(1 + alpha * alpha));
    PropCheckReport r;
    r.name = "decomposition_rectifier";
    r.statistic = std::abs(d.eps2_per_pixel / oracle - 1);
    r.tolerance = 0.05;
    r.sample_count = d.sample_count;
    r.set("eps2_per_pixel", d.eps2_per_pixel);
    r.set("eps2_standard_error", d.eps2_standard_error);
    r.set("quadrature", oracle);
    r.pass = r.statistic <= r.tolerance;
    s.reports.push_back(std::move(r));
  }
  return s;
}

SuiteResult corollary_suite(std::uint64_t seed, std::size_t N) {
  SuiteResult s{"corollary", seed, {}};
  s.reports.push_back(scalar_gain_corollary(0.5, 0.1, 0.5, N, SeededRng(seed)));
  return s;
}

SuiteResult example1_suite(std::uint64_t seed, const std::filesystem::path& out_dir, std::size_t N) {
  SuiteResult s{"example1", seed, {}};
  const SeededRng root(seed);
  for (double lambda : {1.0, 2.0, 4.0})
    s.reports.push_back(
        example1_partial_linearity(lambda, N, root.split(static_cast<std::uint64_t>(lambda)), out_dir).report);
  return s;
}

SuiteResult gradients_suite(std::uint64_t seed) {
  SuiteResult s{"gradients", seed, gradient_suite(seed)};
  s.reports.push_back(penalty_exactness(seed));
  return s;
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"prop1",     "remark2",  "prop2",    "decomposition",
                                              "corollary", "example1", "gradients"};
  return names;
}

SuiteResult run_suite(const std::string& name, std::uint64_t seed, const std::filesystem::path& out_dir) {
  if (name == "prop1") return prop1_suite(seed);
  if (name == "remark2") return remark2_suite(seed);
  if (name == "prop2") return prop2_suite(seed);
  if (name == "decomposition") return decomposition_suite(seed);
  if (name == "corollary") return corollary_suite(seed);
  if (name == "example1") return example1_suite(seed, out_dir);
  if (name == "gradients") return gradients_suite(seed);
  throw ParameterError("unknown suite '" + name + "'");
}

}  // namespace pld
