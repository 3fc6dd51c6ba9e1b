// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "pld/errors.hpp"

namespace pld {

SampleBatch stack_samples(std::span<const CorruptedSample> samples) {
  if (samples.empty()) throw ParameterError("empty sample batch");
  std::vector<Tensor> y, z, yh, t;
  SampleBatch b;
  for (const auto& s : samples) {
    if (s.y.shape() != samples[0].y.shape())
      throw ParameterError("batch samples differ in shape: " + shape_string(s.y.shape()) + " vs " +
                           shape_string(samples[0].y.shape()));
    y.push_back(s.y);
    z.push_back(s.z);
    yh.push_back(s.y_hat);
    t.push_back(s.target);
    b.alpha.push_back(s.alpha);
  }
  b.y = stack(y);
  b.z = stack(z);
  b.y_hat = stack(yh);
  b.target = stack(t);
  return b;
}

namespace {

constexpr std::int64_t kTauDen = std::int64_t{1} << kTauBits;
constexpr double kMaxLatticeMagnitude = 32.0;

// tau1 = t / 2^kTauBits with t restricted so that beta ratios stay within
// [1, 1.5] / [1, 1.5].
constexpr std::int64_t kTauMin = (kTauDen * 2 + 4) / 5;  // ceil(0.4 * den)
constexpr std::int64_t kTauMax = (kTauDen * 3) / 5;      // floor(0.6 * den)

void choose_betas(PerturbationPair& p, SeededRng& rng, std::int64_t& t) {
  double b1 = rng.uniform(1.0, 1.5);
  double b2 = rng.uniform(1.0, 1.5);
  t = std::clamp<std::int64_t>(std::llround(b2 / (b1 + b2) * static_cast<double>(kTauDen)), kTauMin, kTauMax);
  const double r = static_cast<double>(t) / static_cast<double>(kTauDen - t);  // beta2 / beta1
  if (b1 * r >= 1.0 && b1 * r <= 1.5) {
    b2 = b1 * r;
  } else if (b2 / r >= 1.0 && b2 / r <= 1.5) {
    b1 = b2 / r;
  } else {
    b1 = std::clamp(b2 / r, 1.0, 1.5);
    b2 = b1 * r;
  }
  p.beta1 = b1;
  p.beta2 = b2;
  p.tau1 = static_cast<double>(t) / static_cast<double>(kTauDen);
  p.tau2 = static_cast<double>(kTauDen - t) / static_cast<double>(kTauDen);
}

// Jittered grid: one candidate per kPerturbationCell^2 cell with a shared
// offset and a {0,1} jitter per axis, so candidates in different cells are
// at least kPerturbationCell-1 apart in Chebyshev distance.
std::vector<std::size_t> sparse_pixels(std::size_t h, std::size_t w, SeededRng& rng) {
  const std::size_t cell = kPerturbationCell;
  const std::size_t oy = rng.below(cell), ox = rng.below(cell);
  std::vector<std::size_t> cand;
  for (std::size_t cy = 0; oy + cy * cell < h; ++cy)
    for (std::size_t cx = 0; ox + cx * cell < w; ++cx) {
      const std::size_t py = oy + cy * cell + static_cast<std::size_t>(rng.coin());
      const std::size_t px = ox + cx * cell + static_cast<std::size_t>(rng.coin());
      if (py < h && px < w) cand.push_back(py * w + px);
    }
  const std::size_t want = (h * w + cell * cell - 1) / (cell * cell);
  for (std::size_t i = 0; i < cand.size() && i < want; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(cand.size() - i));
    std::swap(cand[i], cand[j]);
  }
  if (cand.size() > want) cand.resize(want);
  std::sort(cand.begin(), cand.end());
  return cand;
}

}  // namespace

PerturbationPair build_perturbation(const Tensor& y_hat, const Tensor& q_variance, double sigma_max, SeededRng& rng,
                                    std::optional<std::pair<double, double>> bounds) {
  if (y_hat.rank() != 3) throw ParameterError("build_perturbation expects a (C,H,W) image");
  require_same_shape(y_hat, q_variance, "build_perturbation");
  if (!(sigma_max > 0.0)) throw ParameterError("build_perturbation: sigma_max must be > 0");
  if (!on_lattice(y_hat, kImageLatticeBits))
    throw ContractError("build_perturbation: y_hat is not on the image lattice (use assemble_sample or snap)");

  PerturbationPair p;
  std::int64_t t = 0;
  choose_betas(p, rng, t);
  p.q1 = y_hat;
  p.q2 = y_hat;
  p.q = Tensor(y_hat.shape());
  p.mask_M = Tensor(y_hat.shape());

  const double a = bounds ? bounds->first : min_value(y_hat);
  const double b = bounds ? bounds->second : max_value(y_hat);
  if (a > b) throw ParameterError("build_perturbation: bounds must satisfy a <= b");
  const double lo = 1.2 * a - 0.2 * b;
  const double hi = 1.2 * b - 0.2 * a;
  if (std::max(std::abs(lo), std::abs(hi)) >= kMaxLatticeMagnitude ||
      std::abs(min_value(y_hat)) >= kMaxLatticeMagnitude || std::abs(max_value(y_hat)) >= kMaxLatticeMagnitude)
    throw ContractError("build_perturbation: values exceed the exact-arithmetic range (|v| < 32)");

  const std::size_t channels = y_hat.extent(0), h = y_hat.extent(1), w = y_hat.extent(2);
  const auto pixels = sparse_pixels(h, w, rng);
  if (a == b) return p;

  const std::int64_t s_int = kTauDen - t;
  const std::int64_t step = s_int / std::gcd(t, s_int);
  for (std::size_t c = 0; c < channels; ++c)
    for (std::size_t pix : pixels) {
      const std::size_t i = c * h * w + pix;
      const double qv = rng.normal() * std::sqrt(q_variance[i]);
      if (qv == 0.0) continue;
      const double yh = y_hat[i];
      double d1 = -p.beta1 * qv;
      double d2 = p.beta2 * qv;
      double shrink = 1.0;
      for (double d : {d1, d2}) {
        if (yh + d < lo) shrink = std::min(shrink, (lo - yh) / d);
        if (yh + d > hi) shrink = std::min(shrink, (hi - yh) / d);
      }
      d1 *= shrink;
      d2 *= shrink;
      const auto Y = static_cast<std::int64_t>(std::ldexp(yh, kImageLatticeBits));
      const double k_real = std::ldexp(d1, kImageLatticeBits);
      const std::int64_t K = step * static_cast<std::int64_t>(std::trunc(k_real / static_cast<double>(step)));
      if (K == 0) continue;
      const std::int64_t Q1 = Y + K;
      const std::int64_t Q2 = Y - t * K / s_int;
      p.q1[i] = std::ldexp(static_cast<double>(Q1), -kImageLatticeBits);
      p.q2[i] = std::ldexp(static_cast<double>(Q2), -kImageLatticeBits);
      p.q[i] = (p.q2[i] - p.q1[i]) / (p.beta1 + p.beta2);
      p.mask_M[i] = 1.0 / (std::abs(p.q1[i] - p.q2[i]) + 0.1 * sigma_max);
    }
  for (std::size_t i = 0; i < y_hat.size(); ++i) {
    if (p.tau1 * p.q1[i] + p.tau2 * p.q2[i] != y_hat[i])
      throw NumericalError("build_perturbation: convex identity failed at element " + std::to_string(i));
    if (p.mask_M[i] != 0.0) ++p.perturbed;
  }
  return p;
}

DeblurOperator::DeblurOperator(Tensor kernel) : kernel_(std::move(kernel)) {
  if (kernel_.rank() != 2 || kernel_.extent(0) % 2 == 0 || kernel_.extent(1) % 2 == 0)
    throw ParameterError("blur kernel must be a rank-2 tensor with odd extents, got " + shape_string(kernel_.shape()));
  const std::size_t kh = kernel_.extent(0), kw = kernel_.extent(1);
  flipped_ = Tensor({1, 1, kh, kw});
  for (std::size_t y = 0; y < kh; ++y)
    for (std::size_t x = 0; x < kw; ++x) flipped_[y * kw + x] = kernel_[(kh - 1 - y) * kw + (kw - 1 - x)];
}

DeblurOperator DeblurOperator::identity() { return DeblurOperator(Tensor({1, 1}, 1.0)); }

DeblurOperator DeblurOperator::box(std::size_t size) {
  return DeblurOperator(Tensor({size, size}, 1.0 / static_cast<double>(size * size)));
}

namespace {

void check_kernel_fits(const Tensor& kernel, std::size_t h, std::size_t w) {
  if (kernel.extent(0) > h || kernel.extent(1) > w)
    throw ParameterError("blur kernel " + shape_string(kernel.shape()) + " exceeds image " + std::to_string(h) + "x" +
                         std::to_string(w));
}

}  // namespace

Tensor DeblurOperator::apply(const Tensor& image) const {
  if (kernel_.empty()) throw ContractError("DeblurOperator used before a kernel was set");
  if (image.rank() != 3 && image.rank() != 4) throw ParameterError("blur expects (C,H,W) or (N,C,H,W)");
  check_kernel_fits(kernel_, image.height(), image.width());
  const std::size_t planes = image.size() / (image.height() * image.width());
  const Tensor as_planes = image.reshaped({planes, 1, image.height(), image.width()});
  ad::Tape tape;
  const ad::Var out = ad::conv2d(tape.constant(as_planes), tape.constant(flipped_));
  return out.value().reshaped(image.shape());
}

ad::Var DeblurOperator::apply(ad::Var image) const {
  if (kernel_.empty()) throw ContractError("DeblurOperator used before a kernel was set");
  const Tensor& v = image.value();
  if (v.rank() != 4 || v.extent(1) != 1) throw ParameterError("differentiable blur expects (N,1,H,W)");
  check_kernel_fits(kernel_, v.height(), v.width());
  return ad::conv2d(image, image.tape().constant(flipped_));
}

Tensor random_motion_kernel(std::size_t size, std::size_t steps, SeededRng& rng, double turn_sd) {
  if (size % 2 == 0 || size == 0) throw ParameterError("motion kernel size must be odd");
  Tensor k({size, size});
  const double half = static_cast<double>(size - 1) / 2.0;
  double px = 0.0, py = 0.0;
  double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
  auto deposit = [&](double x, double y) {
    const double fx = x + half, fy = y + half;
    const auto x0 = static_cast<std::size_t>(std::floor(fx));
    const auto y0 = static_cast<std::size_t>(std::floor(fy));
    const double ax = fx - std::floor(fx), ay = fy - std::floor(fy);
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const std::size_t xx = x0 + static_cast<std::size_t>(dx), yy = y0 + static_cast<std::size_t>(dy);
        if (xx >= size || yy >= size) continue;
        k[yy * size + xx] += (dx ? ax : 1.0 - ax) * (dy ? ay : 1.0 - ay);
      }
  };
  deposit(px, py);
  for (std::size_t s = 0; s < steps; ++s) {
    angle += rng.normal(0.0, turn_sd);
    px = std::clamp(px + 0.5 * std::cos(angle), -half, half);
    py = std::clamp(py + 0.5 * std::sin(angle), -half, half);
    deposit(px, py);
  }
  k *= 1.0 / sum(k);
  return k;
}

namespace {

Tensor perturbed_stack(std::span<const PerturbationPair> pairs, bool first) {
  std::vector<Tensor> items;
  for (const auto& p : pairs) items.push_back(first ? p.q1 : p.q2);
  return stack(items);
}

// Penalty given outputs for [y_hat; q1; q2] stacked along the batch axis.
ad::Var penalty_from_outputs(ad::Var out, std::span<const PerturbationPair> pairs) {
  const std::size_t n = pairs.size();
  ad::Var r0 = ad::slice_batch(out, 0, n);
  ad::Var r1 = ad::slice_batch(out, n, n);
  ad::Var r2 = ad::slice_batch(out, 2 * n, n);
  const Shape& shape = r0.value().shape();
  const std::size_t item = r0.value().size() / n;
  Tensor t1(shape), t2(shape), weight(shape);
  for (std::size_t s = 0; s < n; ++s) {
    const auto& p = pairs[s];
    if (p.mask_M.size() != item) throw ParameterError("perturbation pair does not match the batch item shape");
    const double norm = p.perturbed > 0 ? 1.0 / (static_cast<double>(p.perturbed) * static_cast<double>(n)) : 0.0;
    for (std::size_t i = 0; i < item; ++i) {
      t1[s * item + i] = p.tau1;
      t2[s * item + i] = p.tau2;
      weight[s * item + i] = p.mask_M[i] * p.mask_M[i] * norm;
    }
  }
  ad::Var d = r0 - ad::mul_const(r1, t1) - ad::mul_const(r2, t2);
  return ad::weighted_sum_squares(d, weight);
}

ad::Var objective(const BoundModel& model, const SampleBatch& batch, std::span<const PerturbationPair> pairs,
                  double gamma, const DeblurOperator* blur) {
  if (batch.size() == 0) throw ParameterError("empty batch");
  if (!(gamma >= 0.0)) throw ParameterError("gamma must be >= 0");
  ad::Tape& tape = model.tape();
  const bool penalized = gamma > 0.0;
  if (penalized && pairs.size() != batch.size())
    throw ParameterError("penalty needs one perturbation pair per batch sample");
  ad::Var input;
  if (penalized) {
    const Tensor parts[] = {batch.y_hat, perturbed_stack(pairs, true), perturbed_stack(pairs, false)};
    input = tape.constant(stack_batches(parts));
  } else {
    input = tape.constant(batch.y_hat);
  }
  ad::Var out = model.forward(input);
  if (blur) out = blur->apply(out);
  ad::Var main = penalized ? ad::slice_batch(out, 0, batch.size()) : out;
  ad::Var loss = ad::mean_squares(ad::sub_const(main, batch.target));
  if (penalized) loss = loss + gamma * penalty_from_outputs(out, pairs);
  return loss;
}

}  // namespace

ad::Var empirical_loss(const BoundModel& model, const SampleBatch& batch) {
  return objective(model, batch, {}, 0.0, nullptr);
}

ad::Var plc_penalty(const BoundModel& model, const SampleBatch& batch, std::span<const PerturbationPair> pairs,
                    const DeblurOperator* blur) {
  if (pairs.size() != batch.size()) throw ParameterError("penalty needs one perturbation pair per batch sample");
  const Tensor parts[] = {batch.y_hat, perturbed_stack(pairs, true), perturbed_stack(pairs, false)};
  ad::Var out = model.forward(model.tape().constant(stack_batches(parts)));
  if (blur) out = blur->apply(out);
  return penalty_from_outputs(out, pairs);
}

ad::Var total_denoise_loss(const BoundModel& model, const SampleBatch& batch, std::span<const PerturbationPair> pairs,
                           double gamma) {
  return objective(model, batch, pairs, gamma, nullptr);
}

ad::Var deblur_loss(const BoundModel& model, const DeblurOperator& blur, const SampleBatch& batch,
                    std::span<const PerturbationPair> pairs, double gamma) {
  return objective(model, batch, pairs, gamma, &blur);
}

ad::Var proxy_loss(const BoundModel& model, const Tensor& y, const DeblurOperator& blur_prox, const Tensor& n_prox) {
  ad::Tape& tape = model.tape();
  const Tensor x_prox = ad::detach(model.forward(tape.constant(y))).value();
  return proxy_loss_given(model, x_prox, blur_prox, n_prox);
}

ad::Var proxy_loss_given(const BoundModel& model, const Tensor& x_prox, const DeblurOperator& blur_prox,
                         const Tensor& n_prox) {
  ad::Tape& tape = model.tape();
  Tensor y_prox = blur_prox.apply(x_prox);
  require_same_shape(y_prox, n_prox, "proxy_loss");
  y_prox += n_prox;
  ad::Var restored = model.forward(tape.constant(y_prox));
  return ad::mean_squares(ad::sub_const(restored, x_prox));
}

}  // namespace pld
