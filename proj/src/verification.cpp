// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/verification.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <memory>

#include "json.hpp"
#include "pld/errors.hpp"
#include "pld/losses.hpp"
#include "pld/optim.hpp"

namespace pld {

double PropCheckReport::component(const std::string& key) const {
  for (const auto& [k, v] : components)
    if (k == key) return v;
  throw ParameterError("report has no component '" + key + "'");
}

void PropCheckReport::set(const std::string& key, double value) {
  for (auto& [k, v] : components)
    if (k == key) {
      v = value;
      return;
    }
  components.emplace_back(key, value);
}

std::string PropCheckReport::to_json() const {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(std::to_string(v)); };
  nlohmann::json j;
  j["name"] = name;
  j["statistic"] = num(statistic);
  j["tolerance"] = num(tolerance);
  j["pass"] = pass;
  j["skipped"] = skipped;
  j["sample_count"] = sample_count;
  nlohmann::json c = nlohmann::json::object();
  for (const auto& [k, v] : components) c[k] = num(v);
  j["components"] = c;
  if (!note.empty()) j["note"] = note;
  return j.dump(2);
}

LmmseOracle lmmse_oracle(const std::vector<double>& prior_mean, const std::vector<double>& prior_cov,
                         const std::vector<double>& noise_cov) {
  const std::size_t d = prior_mean.size();
  if (d == 0 || prior_cov.size() != d * d || noise_cov.size() != d * d)
    throw ParameterError("lmmse_oracle: covariance sizes must be dim x dim");
  using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto D = static_cast<Eigen::Index>(d);
  const RowMat cx = Eigen::Map<const RowMat>(prior_cov.data(), D, D);
  const RowMat cn = Eigen::Map<const RowMat>(noise_cov.data(), D, D);
  if (!cx.isApprox(cx.transpose()) || !cn.isApprox(cn.transpose()))
    throw ParameterError("lmmse_oracle: covariances must be symmetric");
  RowMat sum = cx + cn;
  LmmseOracle out;
  Eigen::LDLT<RowMat> ldlt(sum);
  const double scale = std::max(sum.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 1e-12 * scale) {
    out.regularized = true;
    sum.diagonal().array() += 1e-10 * scale;
    ldlt.compute(sum);
  }
  // K = C_x (C_x + C_n)^-1, so K^T = (C_x + C_n)^-1 C_x.
  const RowMat k = ldlt.solve(cx).transpose();
  const Eigen::Map<const Eigen::VectorXd> mu(prior_mean.data(), D);
  const Eigen::VectorXd off = mu - k * mu;
  out.map.dim = d;
  out.map.matrix.assign(k.data(), k.data() + k.size());
  out.map.offset.assign(off.data(), off.data() + off.size());
  return out;
}

void linearity_probe(const Denoiser& denoiser, const Shape& item_shape, const SeededRng& rng) {
  Shape shape = item_shape;
  shape.insert(shape.begin(), 1);
  SeededRng g = rng.split(0x11ea4);
  const Tensor zero(shape);
  const Tensor u = gaussian_samples(g, shape, 0.0, 1.0), v = gaussian_samples(g, shape, 0.0, 1.0);
  const double a = g.uniform(-2.0, 2.0), b = g.uniform(-2.0, 2.0);
  const Tensor r0 = denoiser(zero);
  const Tensor lhs = denoiser(a * u + b * v) - r0;
  const Tensor rhs = a * (denoiser(u) - r0) + b * (denoiser(v) - r0);
  const double scale = std::max({1.0, std::sqrt(squared_norm(lhs)), std::sqrt(squared_norm(rhs))});
  if (std::sqrt(squared_norm(lhs - rhs)) > 1e-9 * scale)
    throw ContractError("linearity probe failed: the denoiser is not affine");
}

namespace {

struct Prop1Stats {
  RunningStat d, j, mse, c, comp, extra, literal, n2, z2;
};

// Accumulates the per-realization risk-identity terms. `diag` (optional) is the
// diagonal of the linear part for the mis-specified-variance term.
Prop1Stats prop1_pass(const Denoiser& denoiser, const CleanSampler& clean, const NoiseSpec& spec, double alpha,
                      std::size_t N, const SeededRng& rng, const std::vector<double>* diag) {
  if (alpha == 0.0) throw ParameterError("the loss needs alpha != 0");
  if (N < 2) throw ParameterError("need at least two realizations");
  Prop1Stats s;
  SeededRng probe = rng.split(0);
  const std::size_t m = clean(probe).size();
  const double beta = spec.aux_variance_scale - 1.0;
  for_each_chunk(N, chunk_length(m), [&](std::size_t first, std::size_t count) {
    const Realizations r = realize(denoiser, clean, spec, alpha, rng, first, count);
    const Tensor rx = denoiser(r.x);
    for (std::size_t k = 0; k < count; ++k) {
      double j = 0, mse = 0, c = 0, cross = 0, comp = 0, n2 = 0, z2 = 0, extra = 0, literal = 0;
      Tensor xk, yk;
      if (diag) {
        xk = batch_item(r.x, k);
        yk = xk + batch_item(r.n, k);
      }
      const Tensor var_n = diag ? noise_variance(spec, xk) : Tensor();
      const Tensor var_z = diag ? auxiliary_variance(spec, yk) : Tensor();
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t q = k * m + i;
        const double err = r.out[q] - r.x[q];
        const double w = r.n[q] - r.z[q] / alpha;
        j += (err - w) * (err - w);
        mse += err * err;
        c += w * w;
        cross += err * w;
        comp += (r.out[q] - rx[q]) * w;
        n2 += r.n[q] * r.n[q];
        z2 += r.z[q] * r.z[q];
        if (diag) {
          extra += 2.0 * (*diag)[i] * (var_z[i] - var_n[i]);
          literal += 2.0 * beta * (*diag)[i] * var_z[i];
        }
      }
      s.d.add(-2.0 * cross);
      s.j.add(j);
      s.mse.add(mse);
      s.c.add(c);
      s.comp.add(comp);
      s.n2.add(n2);
      s.z2.add(z2);
      if (diag) {
        s.extra.add(-2.0 * cross - extra);
        s.literal.add(literal);
      }
    }
  });
  return s;
}

void fill_prop1(PropCheckReport& rep, const Prop1Stats& s) {
  rep.set("J_hat", s.j.mean);
  rep.set("MSE_hat", s.mse.mean);
  rep.set("c_hat", s.c.mean);
  rep.set("J_minus_MSE_minus_c", s.d.mean);
  rep.set("standard_error", s.d.standard_error());
}

}  // namespace

PropCheckReport check_prop1(const Denoiser& denoiser, const CleanSampler& clean, const NoiseSpec& spec, double alpha,
                            std::size_t N, const SeededRng& rng, double se_tol) {
  SeededRng probe = rng.split(0);
  linearity_probe(denoiser, clean(probe).shape(), rng);
  const Prop1Stats s = prop1_pass(denoiser, clean, spec, alpha, N, rng, nullptr);
  PropCheckReport rep;
  rep.name = "prop1";
  rep.sample_count = N;
  fill_prop1(rep, s);
  rep.statistic = s.d.mean;
  rep.tolerance = se_tol * s.d.standard_error();
  rep.set("compensation_mean", s.comp.mean);
  rep.set("compensation_standard_error", s.comp.standard_error());
  rep.pass = std::abs(rep.statistic) <= rep.tolerance &&
             std::abs(s.comp.mean) <= se_tol * s.comp.standard_error() + 1e-15;
  return rep;
}

PropCheckReport check_remark2(const LinearMap& linear, const CleanSampler& clean, const NoiseSpec& spec, double alpha,
                              std::size_t N, const SeededRng& rng, double se_tol) {
  std::vector<double> diag(linear.dim);
  for (std::size_t i = 0; i < linear.dim; ++i) diag[i] = linear.matrix[i * linear.dim + i];
  const Prop1Stats s = prop1_pass(linear_denoiser(linear), clean, spec, alpha, N, rng, &diag);
  PropCheckReport rep;
  rep.name = "remark2";
  rep.sample_count = N;
  fill_prop1(rep, s);
  const double expected = s.d.mean - s.extra.mean;
  rep.set("beta", spec.aux_variance_scale - 1.0);
  rep.set("expected_extra", expected);
  rep.set("literal_extra", s.literal.mean);
  rep.set("paired_standard_error", s.extra.standard_error());
  rep.statistic = s.extra.mean;
  rep.tolerance = se_tol * s.extra.standard_error();
  rep.pass = std::abs(rep.statistic) <= rep.tolerance;
  return rep;
}

PropCheckReport check_prop2_bound(const Denoiser& denoiser, const Tensor& x, const NoiseSpec& spec, double alpha,
                                  std::size_t N, const SeededRng& rng, const Prop2Options& options) {
  const Prop1Stats s = prop1_pass(denoiser, fixed_image(x), spec, alpha, N, rng, nullptr);
  DecompositionOptions dopt;
  dopt.mode = options.mode;
  dopt.retain = std::min(N, 2 * options.lipschitz_pairs);
  const Decomposition dec = residual_stats(denoiser, x, spec, alpha, N, rng.split(1), dopt);
  const double m = static_cast<double>(x.size());
  const double eps2 = dec.eps2_per_pixel * m;
  const double eps = std::sqrt(std::max(eps2, 0.0));
  PropCheckReport rep;
  rep.name = "prop2";
  rep.sample_count = N;
  fill_prop1(rep, s);
  const double err = std::abs(s.d.mean);
  const double bound = 2.0 * eps * std::sqrt(s.c.mean);
  rep.statistic = err;
  rep.tolerance = bound + options.se_tol * s.d.standard_error();
  rep.pass = err <= rep.tolerance;
  rep.set("Err", err);
  rep.set("eps2", eps2);
  rep.set("eps2_per_pixel", dec.eps2_per_pixel);
  rep.set("bound", bound);
  rep.set("slack", rep.tolerance - err);
  double k_hat = 0.0;
  for (std::size_t p = 0; p + 1 < dec.residual_samples.size(); p += 2) {
    const double dn = std::sqrt(squared_norm(dec.retained_n_hat[p] - dec.retained_n_hat[p + 1]));
    if (dn > 0.0)
      k_hat = std::max(k_hat, std::sqrt(squared_norm(dec.residual_samples[p] - dec.residual_samples[p + 1])) / dn);
  }
  if (options.lipschitz_pairs > 0) {
    rep.set("lipschitz_lower_bound", k_hat);
    rep.set("lipschitz_bound", 2.0 * eps * std::sqrt(s.n2.mean) + 2.0 * k_hat * s.z2.mean);
    rep.note = "the Lipschitz bound uses a sampled lower bound on K and is informative only";
  }
  return rep;
}

PropCheckReport check_corollary_delta(const Denoiser& a, const Denoiser& b, const Tensor& x, const NoiseSpec& spec,
                                      double alpha, std::size_t N, const SeededRng& rng, double delta, double eps2,
                                      double se_tol) {
  PropCheckReport rep;
  rep.name = "corollary";
  rep.sample_count = N;
  rep.set("delta", delta);
  rep.set("eps2", eps2);
  if (!(delta >= 0.0) || !(eps2 >= 0.0)) throw ParameterError("delta and eps2 must be >= 0");
  if (delta >= 1.0) {
    rep.skipped = true;
    rep.note = "delta >= 1: bound inapplicable";
    return rep;
  }
  RunningStat lhs;
  const std::size_t m = x.size();
  for_each_chunk(N, chunk_length(m), [&](std::size_t first, std::size_t count) {
    const Realizations r = realize(a, fixed_image(x), spec, alpha, rng, first, count);
    const Tensor ob = b(r.y_hat);
    for (std::size_t k = 0; k < count; ++k) {
      double d = 0.0;
      for (std::size_t i = 0; i < m; ++i) d += (r.out[k * m + i] - ob[k * m + i]) * (r.out[k * m + i] - ob[k * m + i]);
      lhs.add(d);
    }
  });
  const double sd = std::sqrt(delta);
  const double bound = (eps2 + 2.0 * sd) / (1.0 - sd);
  rep.statistic = lhs.mean;
  rep.tolerance = bound + se_tol * lhs.standard_error();
  rep.pass = lhs.mean <= rep.tolerance;
  rep.set("lhs", lhs.mean);
  rep.set("lhs_standard_error", lhs.standard_error());
  rep.set("bound", bound);
  rep.set("slack", bound - lhs.mean);
  return rep;
}

PropCheckReport scalar_gain_corollary(double x, double sigma, double alpha, std::size_t N, const SeededRng& rng,
                                      double grid_step, double se_tol) {
  if (alpha == 0.0) throw ParameterError("alpha must be nonzero");
  if (!(grid_step > 0.0)) throw ParameterError("grid step must be positive");
  const NoiseSpec spec = NoiseSpec::gaussian(sigma);
  const Tensor xi({1, 1, 1}, x);
  // Sample moments of y_hat and the two targets.
  double syy = 0, syx = 0, syt = 0, stt = 0;
  for_each_chunk(N, 4096, [&](std::size_t first, std::size_t count) {
    const Realizations r = realize(constant_denoiser(0.0), fixed_image(xi), spec, alpha, rng, first, count);
    for (std::size_t k = 0; k < count; ++k) {
      const double yh = r.y_hat[k], t = r.x[k] + r.n[k] - r.z[k] / alpha;
      syy += yh * yh;
      syx += yh * x;
      syt += yh * t;
      stt += t * t;
    }
  });
  const double n = static_cast<double>(N);
  syy /= n;
  syx /= n;
  syt /= n;
  // Grid search on [0, 2]; both objectives are quadratics in w.
  auto grid_min = [&](double lin) {
    double best_w = 0.0, best = std::numeric_limits<double>::infinity();
    const auto steps = static_cast<std::size_t>(std::ceil(2.0 / grid_step));
    for (std::size_t s = 0; s <= steps; ++s) {
      const double w = static_cast<double>(s) * grid_step;
      const double v = w * w * syy - 2.0 * w * lin;
      if (v < best) {
        best = v;
        best_w = w;
      }
    }
    return best_w;
  };
  const double w_a = grid_min(syx), w_b = grid_min(syt);
  // Exact objectives: E y_hat^2 = x^2 + sigma^2 (1 + alpha^2); E[y_hat t] = x^2.
  const double q = x * x + sigma * sigma * (1.0 + alpha * alpha);
  const double w_star = x * x / q;
  const double delta = std::max(q * (w_a - w_star) * (w_a - w_star), q * (w_b - w_star) * (w_b - w_star));
  PropCheckReport rep = check_corollary_delta(linear_denoiser(LinearMap::scaled_identity(1, w_a)),
                                              linear_denoiser(LinearMap::scaled_identity(1, w_b)), xi, spec, alpha, N,
                                              rng.split(1), delta, 0.0, se_tol);
  rep.set("w_mse", w_a);
  rep.set("w_loss", w_b);
  rep.set("w_exact", w_star);
  rep.set("w_mse_continuous", syx / syy);
  rep.set("w_loss_continuous", syt / syy);
  rep.set("grid_step", grid_step);
  return rep;
}

double posterior_mean_from_count(double S, std::size_t m, double count_scale, double lambda_max) {
  if (!(S >= 0.0)) throw DomainError("posterior_mean_from_count: total count must be >= 0");
  if (m == 0 || !(count_scale > 0.0) || !(lambda_max > 0.0))
    throw ParameterError("posterior_mean_from_count: m, count scale and lambda_max must be positive");
  const double a = static_cast<double>(m) * count_scale;
  using boost::math::quadrature::gauss_kronrod;
  // Integrand normalized to 1 at its mode x* = S / a.
  const double peak = std::min(S / a, lambda_max);
  auto log_f = [&](double x) {
    if (S == 0.0) return -a * x;
    if (x <= 0.0) return -std::numeric_limits<double>::infinity();
    return S * std::log(x / peak) - a * (x - peak);
  };
  const double width = std::sqrt(std::max(S, 1.0)) / a;
  std::vector<double> cuts = {0.0, lambda_max};
  for (double k : {-12.0, -4.0, -1.0, 0.0, 1.0, 4.0, 12.0}) {
    const double c = peak + k * width;
    if (c > 0.0 && c < lambda_max) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  double z0 = 0.0, z1 = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] <= cuts[i]) continue;
    z0 += gauss_kronrod<double, 61>::integrate([&](double x) { return std::exp(log_f(x)); }, cuts[i], cuts[i + 1], 8,
                                               1e-11);
    z1 += gauss_kronrod<double, 61>::integrate([&](double x) { return x * std::exp(log_f(x)); }, cuts[i], cuts[i + 1],
                                               8, 1e-11);
  }
  if (!(z0 > 0.0)) throw NumericalError("posterior normalizer underflowed");
  return std::clamp(z1 / z0, 0.0, lambda_max);
}

double constant_patch_posterior(double count_scale, double lambda_max, const Tensor& patch) {
  if (patch.empty()) throw ParameterError("constant_patch_posterior: empty patch");
  double S = 0.0;
  for (double v : patch.data()) S += std::nearbyint(v * count_scale);
  return posterior_mean_from_count(S, patch.size(), count_scale, lambda_max);
}

Denoiser constant_patch_denoiser(double count_scale, double lambda_max) {
  // Posterior means depend on the integer total count only; memoized.
  auto cache = std::make_shared<std::map<std::pair<double, std::size_t>, double>>();
  return [count_scale, lambda_max, cache](const Tensor& batch) {
    const std::size_t items = batch.extent(0), m = batch.size() / items;
    Tensor out(batch.shape());
    for (std::size_t k = 0; k < items; ++k) {
      double S = 0.0;
      for (std::size_t i = 0; i < m; ++i) S += std::nearbyint(batch[k * m + i] * count_scale);
      auto [it, fresh] = cache->try_emplace({S, m}, 0.0);
      if (fresh) it->second = posterior_mean_from_count(S, m, count_scale, lambda_max);
      const double v = it->second;
      std::fill_n(out.data().begin() + static_cast<std::ptrdiff_t>(k * m), m, v);
    }
    return out;
  };
}

Example1Result example1_partial_linearity(double lambda_max, std::size_t N, const SeededRng& rng,
                                          const std::filesystem::path& out_dir, double count_scale, std::size_t patch) {
  Example1Result res;
  res.lambda_max = lambda_max;
  const Tensor x = Tensor::image(patch, patch, 0.5 * lambda_max);
  const NoiseSpec spec = NoiseSpec::poisson(count_scale);
  const Denoiser r0 = constant_patch_denoiser(count_scale, lambda_max);
  DecompositionOptions opt;
  opt.mode = LMode::full;
  const Decomposition dec = residual_stats(r0, x, spec, 0.0, N, rng, opt);
  const GEstimate g = estimate_g(r0, x, spec, 0.0, N, rng);
  res.eps2_per_pixel = dec.eps2_per_pixel;
  res.eps2_standard_error = dec.eps2_standard_error;
  const std::size_t centre = (patch / 2) * patch + patch / 2;
  res.output_variance = g.standard_error[centre] * g.standard_error[centre] * static_cast<double>(N);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    res.csv = out_dir / ("example1_lambda" + std::to_string(static_cast<int>(std::lround(lambda_max))) + ".csv");
    write_scatter_csv(res.csv, export_scatter(r0, x, dec, centre, spec, 0.0, std::min<std::size_t>(N, 2000), rng),
                      true);
  }
  auto& rep = res.report;
  rep.name = "example1";
  rep.sample_count = N;
  rep.set("lambda", lambda_max);
  rep.set("eps2_per_pixel", res.eps2_per_pixel);
  rep.set("eps2_standard_error", res.eps2_standard_error);
  rep.set("output_variance", res.output_variance);
  rep.statistic = res.output_variance / std::max(res.eps2_per_pixel + 4.0 * res.eps2_standard_error, 1e-300);
  rep.tolerance = 10.0;
  rep.pass = rep.statistic >= rep.tolerance;
  rep.note = "statistic is Var(R0) / (eps2 + 4 SE); pass requires >= 10";
  return res;
}

namespace {

DenoiserModel probe_model(bool rectifier, SeededRng& rng) {
  ModelConfig c{3, 4, 3, 1, true, rectifier};
  DenoiserModel m = DenoiserModel::initialized(c, rng);
  for (double& v : m.weight(2).data()) v = rng.normal(0.0, 0.3);
  for (std::size_t l = 0; l < 3; ++l)
    for (double& v : m.bias(l).data()) v = rng.normal(0.0, 0.1);
  return m;
}

}  // namespace

std::vector<PropCheckReport> gradient_suite(std::uint64_t seed, std::size_t seeds) {
  const char* names[] = {"grad_empirical", "grad_penalty", "grad_deblur", "grad_proxy"};
  std::vector<PropCheckReport> reps(4);
  for (int w = 0; w < 4; ++w) {
    reps[static_cast<std::size_t>(w)].name = names[w];
    reps[static_cast<std::size_t>(w)].tolerance = 1e-4;
  }
  std::vector<double> checked(4, 0.0), skipped(4, 0.0);
  const SeededRng base(seed);
  for (std::size_t s = 0; s < seeds; ++s) {
    SeededRng rng = base.split(s);
    const DenoiserModel m = probe_model(true, rng);
    std::vector<CorruptedSample> samples;
    std::vector<PerturbationPair> pairs;
    for (int i = 0; i < 2; ++i) {
      const Tensor x = gaussian_samples(rng, {1, 8, 8}, 0.5, 0.2);
      samples.push_back(make_sample(x, NoiseSpec::gaussian(0.1), rng.uniform(0.1, 1.0), rng));
      pairs.push_back(build_perturbation(samples.back().y_hat, Tensor(x.shape(), 0.25), 0.1, rng));
    }
    const SampleBatch batch = stack_samples(samples);
    const DeblurOperator blur = DeblurOperator::box(3);
    const DeblurOperator prox(random_motion_kernel(3, 6, rng));
    const Tensor n_prox = gaussian_samples(rng, batch.y.shape(), 0.0, 0.01);
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
    for (int w = 0; w < 4; ++w) {
      std::vector<Tensor> analytic;
      run(w, m.parameters(), &analytic);
      const auto fd = finite_diff_gradient([&](const std::vector<Tensor>& p) { return run(w, p, nullptr); },
                                           m.parameters());
      const GradCheckReport g = compare_gradients(analytic, fd);
      auto& rep = reps[static_cast<std::size_t>(w)];
      rep.statistic = std::max(rep.statistic, g.max_rel_error);
      checked[static_cast<std::size_t>(w)] += static_cast<double>(g.checked);
      skipped[static_cast<std::size_t>(w)] += static_cast<double>(g.skipped);
    }
  }
  for (std::size_t w = 0; w < 4; ++w) {
    reps[w].sample_count = seeds;
    reps[w].set("max_relative_error", reps[w].statistic);
    reps[w].set("checked", checked[w]);
    reps[w].set("skipped_at_kinks", skipped[w]);
    reps[w].pass = reps[w].statistic <= reps[w].tolerance && checked[w] > 0;
  }
  return reps;
}

PropCheckReport penalty_exactness(std::uint64_t seed, std::size_t trials) {
  PropCheckReport rep;
  rep.name = "penalty_exactness";
  rep.tolerance = 1e-12;
  rep.sample_count = trials;
  const SeededRng base(seed);
  double worst = 0.0, violations = 0.0, clipped_out = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    SeededRng rng = base.split(t);
    const DenoiserModel m = probe_model(false, rng);
    const Tensor x = gaussian_samples(rng, {1, 16, 16}, 0.5, 0.25);
    const CorruptedSample s = make_sample(x, NoiseSpec::gaussian(0.1), rng.uniform(0.1, 0.5), rng);
    const PerturbationPair p = build_perturbation(s.y_hat, Tensor(x.shape(), 0.01), 0.1, rng);
    const double a = min_value(s.y_hat), b = max_value(s.y_hat);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (p.tau1 * p.q1[i] + p.tau2 * p.q2[i] != s.y_hat[i]) ++violations;
      if (p.q1[i] < 1.2 * a - 0.2 * b || p.q1[i] > 1.2 * b - 0.2 * a || p.q2[i] < 1.2 * a - 0.2 * b ||
          p.q2[i] > 1.2 * b - 0.2 * a)
        ++clipped_out;
    }
    const CorruptedSample one[] = {s};
    const PerturbationPair pp[] = {p};
    ad::Tape tape;
    BoundModel bm(tape, m);
    worst = std::max(worst, std::abs(plc_penalty(bm, stack_samples(one), pp).value()[0]));
  }
  rep.statistic = worst;
  rep.set("max_affine_penalty", worst);
  rep.set("identity_violations", violations);
  rep.set("out_of_range_values", clipped_out);
  rep.pass = worst <= rep.tolerance && violations == 0.0 && clipped_out == 0.0;
  return rep;
}

}  // namespace pld
