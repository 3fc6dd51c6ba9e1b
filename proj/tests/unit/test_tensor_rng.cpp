// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "pld/errors.hpp"
#include "pld/io.hpp"
#include "pld/rng.hpp"
#include "pld/tensor.hpp"

using namespace pld;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pld_unit_" + name);
}

void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("philox known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("rng determinism and streams") {
  SeededRng a(42), b(42), c(42, 1);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    CHECK(va == b.next_u64());
    differs |= va != c.next_u64();
  }
  CHECK(differs);
  SeededRng p(9);
  const auto s1 = p.split(3), s2 = p.split(3), s3 = p.split(4);
  CHECK(s1.stream() == s2.stream());
  CHECK(s1.stream() != s3.stream());
}

TEST_CASE("gaussian_samples") {
  SeededRng rng(1);
  const Tensor t = gaussian_samples(rng, {2, 3}, 0.3, 0.0);
  for (double v : t.data()) CHECK(v == 0.3);
  CHECK_THROWS_AS(gaussian_samples(rng, {1}, 0.0, -1.0), ParameterError);

  SeededRng r1(5), r2(5);
  CHECK(gaussian_samples(r1, {4, 4}, 0, 1) == gaussian_samples(r2, {4, 4}, 0, 1));

  // Sample variance of 1e6 standard normals: sd of s^2 is sqrt(2/N) ~ 1.4e-3.
  SeededRng big(77);
  const Tensor n = gaussian_samples(big, {1000000}, 0.0, 1.0);
  const double m = mean(n);
  double var = 0;
  for (double v : n.data()) var += (v - m) * (v - m);
  var /= static_cast<double>(n.size() - 1);
  CHECK(var > 0.99);
  CHECK(var < 1.01);
  CHECK(std::abs(m) < 4e-3);
}

TEST_CASE("poisson sampler moments") {
  for (double mu : {0.7, 4.0, 15.0, 80.0}) {
    SeededRng rng(11);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(rng.poisson(mu));
      s += k;
      s2 += k * k;
    }
    const double m = s / n;
    const double v = s2 / n - m * m;
    CHECK(std::abs(m - mu) < 4 * std::sqrt(mu / n));
    CHECK(std::abs(v / mu - 1) < 0.03);
  }
  SeededRng rng(1);
  CHECK_THROWS_AS(rng.poisson(-1.0), DomainError);
  CHECK(rng.poisson(0.0) == 0);
}

TEST_CASE("tensor arithmetic matches naive loops") {
  SeededRng rng(3);
  const Tensor a = gaussian_samples(rng, {10000}, 0, 1);
  const Tensor b = gaussian_samples(rng, {10000}, 0, 1);
  const Tensor s = a + b;
  const Tensor k = 2.5 * a;
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(s[i] == a[i] + b[i]);
    CHECK(k[i] == 2.5 * a[i]);
    d += a[i] * b[i];
  }
  CHECK(dot(a, b) == d);
  CHECK_THROWS_AS(a + Tensor({3}), ParameterError);
}

TEST_CASE("flip and crop") {
  Tensor t({1, 2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  Tensor f = t;
  flip_horizontal(f);
  CHECK(f.at(0, 0, 0) == 3);
  flip_horizontal(f);
  CHECK(f == t);
  flip_vertical(f);
  CHECK(f.at(0, 0, 0) == 4);
  const Tensor c = crop(t, 1, 1, 1, 2);
  CHECK(std::vector<double>(c.data().begin(), c.data().end()) == std::vector<double>{5, 6});
}

TEST_CASE("pgm io") {
  const auto p = temp_file("a.pgm");
  write_bytes(p, std::string("P5\n# comment\n2 1\n255\n") + char(255) + char(128));
  const Tensor t = read_pgm(p);
  CHECK(t.shape() == Shape{1, 1, 2});
  CHECK(t[0] == 1.0);
  CHECK(t[1] == doctest::Approx(128.0 / 255.0).epsilon(1e-15));

  const auto q = temp_file("b.pgm");
  write_bytes(q, std::string("P5\n2 1\n255\n") + char(7) + char(200));
  write_pgm(p, read_pgm(q));
  std::ifstream a(p, std::ios::binary), b(q, std::ios::binary);
  CHECK(std::string(std::istreambuf_iterator<char>(a), {}) == std::string(std::istreambuf_iterator<char>(b), {}));

  write_bytes(p, "P5\n2 1\n65535\n\0\0\0\0");
  CHECK_THROWS_AS(read_pgm(p), FormatError);
  write_bytes(p, "P2\n1 1\n255\n1");
  CHECK_THROWS_AS(read_pgm(p), FormatError);
  write_bytes(p, std::string("P5\n3 3\n255\n") + "ab");
  CHECK_THROWS_AS(read_pgm(p), FormatError);
}

TEST_CASE("pldt io") {
  const auto p = temp_file("t.pldt");
  write_tensor(p, Tensor({3}, std::vector<double>{0, 0.5, 1}));
  const Tensor r = read_tensor(p);
  CHECK(std::vector<double>(r.data().begin(), r.data().end()) == std::vector<double>{0, 0.5, 1});
  write_tensor(p, Tensor({1}, std::vector<double>{1e-9}));
  CHECK(read_tensor(p)[0] == static_cast<double>(1e-9f));

  write_bytes(p, "PLDX\1\0\1\0\1\0\0\0\0\0\0\0");
  CHECK_THROWS_AS(read_tensor(p), FormatError);
  write_bytes(p, std::string("PLDT\1\0\1\0\2\0\0\0", 12) + "abcd");
  CHECK_THROWS_AS(read_tensor(p), FormatError);
}
