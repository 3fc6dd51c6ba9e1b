// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "pld/autodiff.hpp"
#include "pld/errors.hpp"
#include "pld/model.hpp"
#include "pld/optim.hpp"

using namespace pld;

namespace {

DenoiserModel random_model(ModelConfig c, std::uint64_t seed, double last_scale = 0.3) {
  SeededRng rng(seed);
  DenoiserModel m = DenoiserModel::initialized(c, rng);
  for (double& v : m.weight(c.depth - 1).data()) v = rng.normal(0.0, last_scale);
  for (std::size_t l = 0; l < c.depth; ++l)
    for (double& v : m.bias(l).data()) v = rng.normal(0.0, 0.1);
  return m;
}

Tensor random_image(std::uint64_t seed, Shape shape) {
  SeededRng rng(seed);
  return gaussian_samples(rng, shape, 0.5, 0.3);
}

}  // namespace

TEST_CASE("w^2 gradient") {
  ad::Tape tape;
  ad::Var w = tape.leaf(Tensor({1}, 3.0));
  ad::Var loss = ad::mul(w, w);
  tape.backward(loss);
  CHECK(w.grad()[0] == 6.0);
}

TEST_CASE("backward needs a scalar") {
  ad::Tape tape;
  ad::Var w = tape.leaf(Tensor({2}, 1.0));
  CHECK_THROWS_AS(tape.backward(ad::scale(2.0, w)), ContractError);
}

TEST_CASE("detached branch carries no gradient") {
  ad::Tape tape;
  ad::Var w = tape.leaf(Tensor({1}, 2.0));
  ad::Var d = ad::detach(ad::mul(w, w));
  ad::Var loss = ad::mul(d, w);  // d treated as the constant 4
  tape.backward(loss);
  CHECK(w.grad()[0] == 4.0);
}

TEST_CASE("model forward basics") {
  ModelConfig c;
  DenoiserModel zero(c);
  const Tensor x = random_image(1, {1, 8, 8});
  CHECK(zero.forward(x) == x);

  ModelConfig lin{1, 1, 1, 1, false, false};
  DenoiserModel two(lin);
  two.weight(0)[0] = 2.0;
  CHECK(two.forward(x) == 2.0 * x);

  ad::Tape tape;
  CHECK(ad::relu(tape.constant(Tensor({1}, -1.0))).value()[0] == 0.0);

  CHECK_THROWS_AS(zero.forward(Tensor({2, 8, 8})), ParameterError);
}

TEST_CASE("tape forward matches inference forward") {
  ModelConfig c{3, 4, 3, 1, true, true};
  const DenoiserModel m = random_model(c, 3);
  const Tensor x = random_image(4, {2, 1, 8, 8});
  ad::Tape tape;
  BoundModel b(tape, m);
  CHECK(b.forward(tape.constant(x)).value() == m.forward(x));
}

TEST_CASE("affine model is linear up to the bias") {
  ModelConfig c{3, 4, 3, 1, false, false};
  const DenoiserModel m = random_model(c, 8);
  const Tensor u = random_image(1, {1, 8, 8}), v = random_image(2, {1, 8, 8});
  const Tensor r0 = m.forward(Tensor({1, 8, 8}));
  const Tensor lhs = m.forward(0.3 * u + (-1.7) * v) - r0;
  const Tensor rhs = 0.3 * (m.forward(u) - r0) + (-1.7) * (m.forward(v) - r0);
  for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]).epsilon(1e-12));
}

TEST_CASE("model gradient matches finite differences") {
  ModelConfig c{3, 4, 3, 1, true, true};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const DenoiserModel m = random_model(c, seed);
    const Tensor x = random_image(seed + 10, {2, 1, 8, 8});
    const Tensor t = random_image(seed + 20, {2, 1, 8, 8});
    auto eval = [&](const std::vector<Tensor>& params, std::vector<Tensor>* grads) {
      DenoiserModel mm = m;
      mm.parameters() = params;
      ad::Tape tape;
      BoundModel b(tape, mm);
      ad::Var loss = ad::mean_squares(ad::sub_const(b.forward(tape.constant(x)), t));
      if (grads) {
        tape.backward(loss);
        *grads = b.gradients();
      }
      return LossProbe{loss.value()[0], tape.relu_signature()};
    };
    std::vector<Tensor> analytic;
    eval(m.parameters(), &analytic);
    const auto fd = finite_diff_gradient([&](const std::vector<Tensor>& p) { return eval(p, nullptr); },
                                         m.parameters());
    const auto rep = compare_gradients(analytic, fd);
    CHECK(rep.checked > 100);
    CHECK(rep.max_rel_error < 1e-4);
  }
}

TEST_CASE("adam") {
  AdamState st;
  std::vector<Tensor> p = {Tensor({1}, 0.5)};
  adam_step(st, p, {Tensor({1}, 1.0)});
  CHECK(p[0][0] == doctest::Approx(0.5 - 1e-3).epsilon(1e-9));

  AdamState z;
  std::vector<Tensor> q = {Tensor({3}, 0.25)};
  for (int i = 0; i < 5; ++i) adam_step(z, q, {Tensor({3}, 0.0)});
  CHECK(q[0] == Tensor({3}, 0.25));

  std::vector<Tensor> r = {Tensor({1}, 0.0)};
  CHECK_THROWS_AS(adam_step(z, r, {Tensor({1}, std::nan(""))}), NumericalError);
}

TEST_CASE("checkpoint round trip") {
  const DenoiserModel m = random_model(ModelConfig{}, 5);
  const auto dir = std::filesystem::temp_directory_path() / "pld_unit_ckpt";
  std::filesystem::remove_all(dir);
  save_checkpoint(dir, m);
  const DenoiserModel r = load_checkpoint(dir);
  CHECK(r.config() == m.config());
  for (std::size_t i = 0; i < m.parameters().size(); ++i)
    for (std::size_t k = 0; k < m.parameters()[i].size(); ++k)
      CHECK(r.parameters()[i][k] == static_cast<double>(static_cast<float>(m.parameters()[i][k])));
}
