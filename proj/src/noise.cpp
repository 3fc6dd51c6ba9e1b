// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/noise.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pld/errors.hpp"

namespace pld {

NoiseSpec NoiseSpec::gaussian(double sigma) {
  NoiseSpec s;
  s.kind = Kind::gaussian;
  s.sigma = sigma;
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::poisson(double lambda) {
  NoiseSpec s;
  s.kind = Kind::poisson;
  s.lambda = lambda;
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::variance_map(Tensor variance) {
  NoiseSpec s;
  s.kind = Kind::var_map;
  s.variance = std::move(variance);
  s.validate();
  return s;
}

NoiseSpec NoiseSpec::with_aux_scale(double scale) const {
  NoiseSpec s = *this;
  s.aux_variance_scale = scale;
  s.validate();
  return s;
}

void NoiseSpec::validate() const {
  if (!(aux_variance_scale > 0.0)) throw ParameterError("auxiliary variance scale must be > 0");
  switch (kind) {
    case Kind::gaussian:
      if (!(sigma >= 0.0)) throw ParameterError("gaussian noise needs sigma >= 0");
      break;
    case Kind::poisson:
      if (!(lambda > 0.0)) throw ParameterError("poisson noise needs lambda > 0");
      break;
    case Kind::var_map:
      if (variance.empty()) throw ParameterError("variance map is empty");
      for (double v : variance.data())
        if (!(v >= 0.0)) throw ParameterError("variance map entries must be >= 0");
      break;
  }
}

std::string NoiseSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind) {
    case Kind::gaussian: os << "gaussian(sigma=" << sigma; break;
    case Kind::poisson: os << "poisson(lambda=" << lambda; break;
    case Kind::var_map: os << "var_map(" << shape_string(variance.shape()); break;
  }
  if (aux_variance_scale != 1.0) os << ", aux_scale=" << aux_variance_scale;
  os << ')';
  return os.str();
}

double sigma_max(const NoiseSpec& spec, const Tensor& y) {
  switch (spec.kind) {
    case NoiseSpec::Kind::gaussian: return spec.sigma;
    case NoiseSpec::Kind::poisson: return std::sqrt(std::max(max_value(y), 0.0) / spec.lambda);
    case NoiseSpec::Kind::var_map: return std::sqrt(max_value(spec.variance));
  }
  return 0.0;
}

Tensor noise_variance(const NoiseSpec& spec, const Tensor& x) {
  switch (spec.kind) {
    case NoiseSpec::Kind::gaussian: return Tensor(x.shape(), spec.sigma * spec.sigma);
    case NoiseSpec::Kind::poisson:
      return map(x, [&](double v) { return std::max(v, 0.0) / spec.lambda; });
    case NoiseSpec::Kind::var_map:
      require_same_shape(x, spec.variance, "noise_variance");
      return spec.variance;
  }
  return {};
}

Tensor auxiliary_variance(const NoiseSpec& spec, const Tensor& y) {
  Tensor v = noise_variance(spec, y);
  v *= spec.aux_variance_scale;
  return v;
}

Tensor sample_noise(const NoiseSpec& spec, const Tensor& x, SeededRng& rng) {
  Tensor n(x.shape());
  switch (spec.kind) {
    case NoiseSpec::Kind::gaussian:
      if (spec.sigma > 0.0)
        for (double& v : n.data()) v = rng.normal(0.0, spec.sigma);
      break;
    case NoiseSpec::Kind::poisson:
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < 0.0) throw DomainError("poisson noise needs a nonnegative clean image");
        const double k = static_cast<double>(rng.poisson(spec.lambda * x[i]));
        n[i] = k / spec.lambda - x[i];
      }
      break;
    case NoiseSpec::Kind::var_map:
      require_same_shape(x, spec.variance, "sample_noise");
      for (std::size_t i = 0; i < x.size(); ++i) n[i] = rng.normal(0.0, std::sqrt(spec.variance[i]));
      break;
  }
  return n;
}

Tensor sample_auxiliary(const NoiseSpec& spec, const Tensor& y, SeededRng& rng) {
  const Tensor var = auxiliary_variance(spec, y);
  Tensor z(y.shape());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = var[i] > 0.0 ? rng.normal(0.0, std::sqrt(var[i])) : 0.0;
  return z;
}

double snap(double v, int bits) { return std::ldexp(std::nearbyint(std::ldexp(v, bits)), -bits); }

Tensor snap(const Tensor& t, int bits) {
  return map(t, [bits](double v) { return snap(v, bits); });
}

bool on_lattice(const Tensor& t, int bits) {
  return std::all_of(t.data().begin(), t.data().end(), [bits](double v) { return snap(v, bits) == v; });
}

CorruptedSample assemble_sample(const Tensor& y, const Tensor& z, double alpha) {
  require_same_shape(y, z, "assemble_sample");
  CorruptedSample s;
  s.alpha = snap(alpha, kAuxLatticeBits);
  if (s.alpha == 0.0 || !std::isfinite(s.alpha)) throw ParameterError("alpha must be nonzero and finite");
  s.y = snap(y, kImageLatticeBits);
  s.z = snap(z, kAuxLatticeBits);
  s.y_hat = Tensor(y.shape());
  s.target = Tensor(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) {
    s.y_hat[i] = s.y[i] + s.alpha * s.z[i];
    s.target[i] = s.y[i] - s.z[i] / s.alpha;
  }
  return s;
}

CorruptedSample make_sample_from_observation(const Tensor& y, const NoiseSpec& spec, double alpha, SeededRng& rng) {
  if (alpha == 0.0) throw ParameterError("alpha must be nonzero");
  return assemble_sample(y, sample_auxiliary(spec, y, rng), alpha);
}

CorruptedSample make_sample(const Tensor& x, const NoiseSpec& spec, double alpha, SeededRng& rng) {
  if (alpha == 0.0) throw ParameterError("alpha must be nonzero");
  Tensor y = x + sample_noise(spec, x, rng);
  return make_sample_from_observation(y, spec, alpha, rng);
}

}  // namespace pld
