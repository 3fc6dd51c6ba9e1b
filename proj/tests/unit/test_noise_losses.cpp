// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <set>

#include "doctest.h"
#include "pld/errors.hpp"
#include "pld/losses.hpp"
#include "pld/noise.hpp"
#include "pld/optim.hpp"

using namespace pld;

TEST_CASE("noise sampling") {
  SeededRng rng(1);
  const Tensor x({1, 4, 4}, 0.5);
  CHECK(sample_noise(NoiseSpec::gaussian(0.0), x, rng) == Tensor(x.shape()));
  CHECK(sample_auxiliary(NoiseSpec::gaussian(0.0), x, rng) == Tensor(x.shape()));
  CHECK_THROWS_AS(sample_noise(NoiseSpec::poisson(30), Tensor({1}, -0.1), rng), DomainError);

  // Poisson lambda=30 at x=0.5: Var(n) = x / lambda.
  const Tensor big({1000000}, 0.5);
  const Tensor n = sample_noise(NoiseSpec::poisson(30.0), big, rng);
  const double m = mean(n);
  double var = 0;
  for (double v : n.data()) var += (v - m) * (v - m);
  var /= static_cast<double>(n.size() - 1);
  CHECK(std::abs(m) < 3 * std::sqrt(0.5 / 30 / 1e6));
  CHECK(std::abs(var / (0.5 / 30) - 1) < 0.02);

  Tensor y({1, 1, 2}, std::vector<double>{0.0, 0.6});
  const Tensor z = sample_auxiliary(NoiseSpec::poisson(30), y, rng);
  CHECK(z[0] == 0.0);

  const double s = 25.0 / 255.0;
  const Tensor zz = sample_auxiliary(NoiseSpec::gaussian(s), Tensor({1000000}), rng);
  CHECK(std::abs(squared_norm(zz) / 1e6 / (s * s) - 1) < 0.01);
}

TEST_CASE("sample assembly") {
  const CorruptedSample s = assemble_sample(Tensor({1}, 0.5), Tensor({1}, 0.1), 0.5);
  CHECK(s.y[0] == 0.5);
  CHECK(s.y_hat[0] == doctest::Approx(0.55).epsilon(1e-6));
  CHECK(s.target[0] == doctest::Approx(0.3).epsilon(1e-6));
  CHECK_THROWS_AS(assemble_sample(Tensor({1}), Tensor({1}), 0.0), ParameterError);

  SeededRng rng(2);
  for (int k = 0; k < 50; ++k) {
    const Tensor x = gaussian_samples(rng, {1, 6, 6}, 0.5, 0.3);
    const auto c = make_sample(x, NoiseSpec::gaussian(0.2), rng.uniform(0.1, 0.5), rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(c.y_hat[i] - c.alpha * c.z[i] == c.y[i]);
      CHECK(c.y_hat[i] == c.y[i] + c.alpha * c.z[i]);
      CHECK(c.target[i] == c.y[i] - c.z[i] / c.alpha);
    }
  }
}

TEST_CASE("target is conditionally unbiased") {
  SeededRng rng(3);
  const Tensor x({1, 1, 1}, 0.4);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double t = make_sample(x, NoiseSpec::gaussian(0.1), 0.5, rng).target[0];
    s += t;
    s2 += t * t;
  }
  const double m = s / n, se = std::sqrt((s2 / n - m * m) / n);
  CHECK(std::abs(m - 0.4) < 3 * se);
}

namespace {

DenoiserModel small_model(bool rectifier, std::uint64_t seed) {
  ModelConfig c{3, 4, 3, 1, true, rectifier};
  SeededRng rng(seed);
  DenoiserModel m = DenoiserModel::initialized(c, rng);
  for (double& v : m.weight(2).data()) v = rng.normal(0.0, 0.3);
  for (std::size_t l = 0; l < 3; ++l)
    for (double& v : m.bias(l).data()) v = rng.normal(0.0, 0.1);
  return m;
}

}  // namespace

TEST_CASE("empirical loss closed forms") {
  ad::Tape tape;
  BoundModel identity(tape, DenoiserModel(ModelConfig{}));
  Tensor z({1, 1, 2}, std::vector<double>{0.1, -0.2});
  // z values are lattice-rounded, so compare to the rounded closed form.
  const auto s = assemble_sample(Tensor({1, 1, 2}, std::vector<double>{0.3, 0.7}), z, 1.0);
  const CorruptedSample one[] = {s};
  const double expect = 4.0 * squared_norm(s.z) / 2.0;
  CHECK(empirical_loss(identity, stack_samples(one)).value()[0] == doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(0.1).epsilon(1e-5));

  const auto s0 = assemble_sample(Tensor({1, 1, 2}, std::vector<double>{0.3, 0.7}), Tensor({1, 1, 2}), 1.0);
  const CorruptedSample zero[] = {s0};
  CHECK(empirical_loss(identity, stack_samples(zero)).value()[0] == 0.0);
}

TEST_CASE("perturbation construction") {
  SeededRng rng(4);
  const Tensor yh = snap(gaussian_samples(rng, {1, 40, 40}, 0.5, 0.2), kImageLatticeBits);
  for (int rep = 0; rep < 20; ++rep) {
    const auto p = build_perturbation(yh, Tensor(yh.shape(), 0.01), 0.1, rng);
    CHECK(p.perturbed <= 64);
    CHECK(p.beta1 >= 1.0);
    CHECK(p.beta1 <= 1.5);
    CHECK(p.beta2 >= 1.0);
    CHECK(p.beta2 <= 1.5);
    CHECK(p.tau1 + p.tau2 == 1.0);
    const double a = min_value(yh), b = max_value(yh);
    std::vector<std::pair<int, int>> pts;
    for (std::size_t i = 0; i < yh.size(); ++i) {
      CHECK(p.tau1 * p.q1[i] + p.tau2 * p.q2[i] == yh[i]);
      CHECK(p.q1[i] >= 1.2 * a - 0.2 * b);
      CHECK(p.q2[i] <= 1.2 * b - 0.2 * a);
      if (p.q[i] == 0.0) CHECK(p.mask_M[i] == 0.0);
      if (p.q[i] != 0.0) pts.emplace_back(static_cast<int>(i / 40), static_cast<int>(i % 40));
    }
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        CHECK(std::max(std::abs(pts[i].first - pts[j].first), std::abs(pts[i].second - pts[j].second)) >= 4);
  }
  const auto flat = build_perturbation(Tensor({1, 8, 8}, 0.5), Tensor({1, 8, 8}, 0.01), 0.1, rng);
  CHECK(flat.perturbed == 0);
  CHECK_THROWS_AS(build_perturbation(Tensor({1, 2, 2}, 0.1), Tensor({1, 2, 2}, 0.01), 0.1, rng), ContractError);
}

TEST_CASE("penalty values") {
  SeededRng rng(5);
  const Tensor yh = snap(gaussian_samples(rng, {1, 10, 10}, 0.5, 0.2), kImageLatticeBits);
  const auto s = assemble_sample(yh, Tensor(yh.shape()), 1.0);
  const CorruptedSample one[] = {s};
  const auto batch = stack_samples(one);

  // Affine model: penalty vanishes.
  for (int k = 0; k < 5; ++k) {
    const PerturbationPair pairs[] = {build_perturbation(s.y_hat, Tensor(yh.shape(), 0.04), 0.2, rng)};
    ad::Tape tape;
    BoundModel lin(tape, small_model(false, 10 + k));
    CHECK(std::abs(plc_penalty(lin, batch, pairs).value()[0]) <= 1e-12);
  }

  // Rectifier R(v) = max(0, v) on y_hat = 0, q1 = -1, q2 = 1, tau = 0.5.
  DenoiserModel relu(ModelConfig{2, 1, 1, 1, false, true});
  relu.weight(0)[0] = 1.0;
  relu.weight(1)[0] = 1.0;
  PerturbationPair p;
  p.q1 = Tensor({1, 1, 1}, -1.0);
  p.q2 = Tensor({1, 1, 1}, 1.0);
  p.q = Tensor({1, 1, 1}, 1.0);
  p.mask_M = Tensor({1, 1, 1}, 1.0);
  p.perturbed = 1;
  const CorruptedSample zero[] = {assemble_sample(Tensor({1, 1, 1}), Tensor({1, 1, 1}), 1.0)};
  ad::Tape tape;
  BoundModel br(tape, relu);
  const PerturbationPair pp[] = {p};
  CHECK(plc_penalty(br, stack_samples(zero), pp).value()[0] == doctest::Approx(0.25));
}

TEST_CASE("loss gradients match finite differences") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SeededRng rng(seed);
    const DenoiserModel m = small_model(true, seed);
    std::vector<CorruptedSample> samples;
    std::vector<PerturbationPair> pairs;
    for (int i = 0; i < 2; ++i) {
      const Tensor x = gaussian_samples(rng, {1, 12, 12}, 0.5, 0.2);
      samples.push_back(make_sample(x, NoiseSpec::gaussian(0.1), 0.3, rng));
      pairs.push_back(build_perturbation(samples.back().y_hat, Tensor(x.shape(), 0.25), 0.1, rng));
    }
    const auto batch = stack_samples(samples);
    const DeblurOperator blur = DeblurOperator::box(3);
    const DeblurOperator prox(random_motion_kernel(3, 6, rng));
    const Tensor n_prox = gaussian_samples(rng, batch.y.shape(), 0.0, 0.01);
    // x_prox is detached, so the check holds it at the base parameters.
    const Tensor x_prox = m.forward(batch.y);

    auto run = [&](int which, const std::vector<Tensor>& params, std::vector<Tensor>* grads) {
      DenoiserModel mm = m;
      mm.parameters() = params;
      ad::Tape tape;
      BoundModel b(tape, mm);
      ad::Var loss;
      switch (which) {
        case 0: loss = empirical_loss(b, batch); break;
        case 1: loss = plc_penalty(b, batch, pairs); break;
        case 2: loss = deblur_loss(b, blur, batch, pairs, 0.5); break;
        default: loss = proxy_loss_given(b, x_prox, prox, n_prox); break;
      }
      if (grads) {
        tape.backward(loss);
        *grads = b.gradients();
      }
      return LossProbe{loss.value()[0], tape.relu_signature()};
    };
    for (int which = 0; which < 4; ++which) {
      std::vector<Tensor> analytic;
      run(which, m.parameters(), &analytic);
      const auto fd = finite_diff_gradient([&](const std::vector<Tensor>& p) { return run(which, p, nullptr); },
                                           m.parameters());
      const auto rep = compare_gradients(analytic, fd);
      INFO("loss " << which << " seed " << seed);
      CHECK(rep.checked > 20);
      CHECK(rep.max_rel_error < 1e-4);
    }
  }
}

TEST_CASE("deblur operator") {
  SeededRng rng(6);
  const Tensor x = gaussian_samples(rng, {1, 6, 6}, 0, 1);
  CHECK(DeblurOperator::identity().apply(x) == x);
  CHECK_THROWS_AS(DeblurOperator::box(7).apply(x), ParameterError);
  const Tensor k = random_motion_kernel(5, 10, rng);
  CHECK(sum(k) == doctest::Approx(1.0));
  for (double v : k.data()) CHECK(v >= 0.0);
}
