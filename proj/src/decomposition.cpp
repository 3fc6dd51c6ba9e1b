// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/decomposition.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "pld/errors.hpp"

namespace pld {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;

ConstMap as_rows(const Tensor& batch, std::size_t m) {
  return ConstMap(batch.data().data(), static_cast<Eigen::Index>(batch.size() / m), static_cast<Eigen::Index>(m));
}

void check_image(const Tensor& x) {
  if (x.rank() != 3 || x.empty()) throw ParameterError("decomposition: x must be a (C,H,W) image");
}

void check_full(std::size_t m, std::size_t N) {
  if (m > kMaxFullDim)
    throw ContractError("full L fit limited to " + std::to_string(kMaxFullDim) + " pixels; use diagonal mode");
  if (N < 2 * m)
    throw ContractError("full L fit is underdetermined with N=" + std::to_string(N) + " < 2m=" +
                        std::to_string(2 * m) + "; raise N or use diagonal mode");
}

// Uncentered sums of n_hat and (R - shift) and their cross products.
struct Moments {
  std::size_t N = 0;
  Eigen::VectorXd sn, sr;
  RowMat snn, srn;      // full mode
  Eigen::VectorXd dnn;  // diagonal mode
  Eigen::VectorXd drn;
};

Moments accumulate(const Denoiser& R, const Tensor& x, const Tensor& shift, const NoiseSpec& spec, double alpha,
                   std::size_t N, const SeededRng& rng, LMode mode) {
  const std::size_t m = x.size();
  const auto M = static_cast<Eigen::Index>(m);
  Moments s;
  s.N = N;
  s.sn = Eigen::VectorXd::Zero(M);
  s.sr = Eigen::VectorXd::Zero(M);
  if (mode == LMode::full) {
    s.snn = RowMat::Zero(M, M);
    s.srn = RowMat::Zero(M, M);
  } else {
    s.dnn = Eigen::VectorXd::Zero(M);
    s.drn = Eigen::VectorXd::Zero(M);
  }
  const Eigen::Map<const Eigen::RowVectorXd> sh(shift.data().data(), M);
  const CleanSampler clean = fixed_image(x);
  for_each_chunk(N, chunk_length(m), [&](std::size_t first, std::size_t count) {
    const Realizations r = realize(R, clean, spec, alpha, rng, first, count);
    const ConstMap nh = as_rows(r.n_hat, m);
    const RowMat out = as_rows(r.out, m).rowwise() - sh;
    s.sn += nh.colwise().sum().transpose();
    s.sr += out.colwise().sum().transpose();
    if (mode == LMode::full) {
      s.snn.noalias() += nh.transpose() * nh;
      s.srn.noalias() += out.transpose() * nh;
    } else {
      s.dnn += nh.cwiseProduct(nh).colwise().sum().transpose();
      s.drn += out.cwiseProduct(nh).colwise().sum().transpose();
    }
  });
  return s;
}

// Solves L = C_rn (C_nn + ridge mean(diag C_nn) I)^-1 on normalized moments.
LinearPart solve(const Moments& s, std::size_t m, bool centered, double ridge, LMode mode) {
  const double n = static_cast<double>(s.N);
  const Eigen::VectorXd mn = s.sn / n, mr = s.sr / n;
  LinearPart L;
  L.mode = mode;
  L.dim = m;
  if (mode == LMode::full) {
    RowMat cnn = s.snn / n, crn = s.srn / n;
    if (centered) {
      cnn -= mn * mn.transpose();
      crn -= mr * mn.transpose();
    }
    const double level = cnn.diagonal().mean();
    if (!(level > 0.0)) {
      L.values.assign(m * m, 0.0);
      return L;
    }
    cnn.diagonal().array() += ridge * level;
    // L cnn = crn  <=>  cnn L^T = crn^T (cnn symmetric).
    const RowMat lt = cnn.ldlt().solve(crn.transpose());
    const RowMat l = lt.transpose();
    L.values.assign(l.data(), l.data() + l.size());
  } else {
    L.values.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      double vnn = s.dnn[k] / n, vrn = s.drn[k] / n;
      if (centered) {
        vnn -= mn[k] * mn[k];
        vrn -= mr[k] * mn[k];
      }
      L.values[i] = vnn > 0.0 ? vrn / (vnn * (1.0 + ridge)) : 0.0;
    }
  }
  return L;
}

}  // namespace

double LinearPart::at(std::size_t i, std::size_t j) const {
  if (mode == LMode::full) return values.at(i * dim + j);
  return i == j ? values.at(i) : 0.0;
}

Tensor LinearPart::apply(const Tensor& n_hat) const {
  if (dim == 0 || n_hat.size() % dim != 0) throw ParameterError("LinearPart::apply: size mismatch");
  Tensor out(n_hat.shape());
  const std::size_t items = n_hat.size() / dim;
  for (std::size_t k = 0; k < items; ++k) {
    const double* v = n_hat.data().data() + k * dim;
    double* o = out.data().data() + k * dim;
    if (mode == LMode::full) {
      for (std::size_t i = 0; i < dim; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < dim; ++j) acc += values[i * dim + j] * v[j];
        o[i] = acc;
      }
    } else {
      for (std::size_t i = 0; i < dim; ++i) o[i] = values[i] * v[i];
    }
  }
  return out;
}

double LinearPart::trace_weighted(const Tensor& variance) const {
  if (variance.size() != dim) throw ParameterError("trace_weighted: variance size mismatch");
  double t = 0.0;
  for (std::size_t i = 0; i < dim; ++i) t += at(i, i) * variance[i];
  return t;
}

GEstimate estimate_g(const Denoiser& denoiser, const Tensor& x, const NoiseSpec& spec, double alpha, std::size_t N,
                     const SeededRng& rng) {
  check_image(x);
  if (N < 100) throw ParameterError("estimate_g needs N >= 100");
  const std::size_t m = x.size();
  std::vector<RunningStat> stats(m);
  const CleanSampler clean = fixed_image(x);
  for_each_chunk(N, chunk_length(m), [&](std::size_t first, std::size_t count) {
    const Realizations r = realize(denoiser, clean, spec, alpha, rng, first, count);
    for (std::size_t k = 0; k < count; ++k)
      for (std::size_t i = 0; i < m; ++i) stats[i].add(r.out[k * m + i]);
  });
  GEstimate g{Tensor(x.shape()), Tensor(x.shape()), N};
  for (std::size_t i = 0; i < m; ++i) {
    g.mean[i] = stats[i].mean;
    g.standard_error[i] = stats[i].standard_error();
  }
  return g;
}

LinearPart fit_L(const Denoiser& denoiser, const Tensor& x, const Tensor& g_of_x, const NoiseSpec& spec, double alpha,
                 std::size_t N, const SeededRng& rng, LMode mode, double ridge) {
  check_image(x);
  require_same_shape(x, g_of_x, "fit_L");
  if (mode == LMode::full) check_full(x.size(), N);
  if (N < 2) throw ParameterError("fit_L needs N >= 2");
  if (!(ridge >= 0.0)) throw ParameterError("ridge must be >= 0");
  const Moments s = accumulate(denoiser, x, g_of_x, spec, alpha, N, rng, mode);
  return solve(s, x.size(), false, ridge, mode);
}

Decomposition residual_stats(const Denoiser& denoiser, const Tensor& x, const NoiseSpec& spec, double alpha,
                             std::size_t N, const SeededRng& rng, const DecompositionOptions& options) {
  check_image(x);
  const std::size_t m = x.size();
  const std::size_t p = options.mode == LMode::full ? m + 1 : 2;
  if (options.mode == LMode::full) check_full(m, N);
  if (N <= p) throw ParameterError("residual_stats needs more realizations than fitted coefficients per pixel");
  if (!(options.ridge >= 0.0)) throw ParameterError("ridge must be >= 0");

  // Shift outputs by R(x) to keep the cross products well conditioned.
  const Tensor x_batch = x.reshaped([&] {
    Shape s = x.shape();
    s.insert(s.begin(), 1);
    return s;
  }());
  const Tensor shift = denoiser(x_batch).reshaped(x.shape());
  const Moments s = accumulate(denoiser, x, shift, spec, alpha, N, rng, options.mode);

  Decomposition d;
  d.sample_count = N;
  d.L = solve(s, m, true, options.ridge, options.mode);
  const double n = static_cast<double>(N);
  const Tensor mean_n = Tensor(x.shape(), std::vector<double>(s.sn.data(), s.sn.data() + m));
  const Tensor l_mean = d.L.apply(1.0 / n * mean_n);
  d.g_of_x = Tensor(x.shape());
  for (std::size_t i = 0; i < m; ++i) d.g_of_x[i] = shift[i] + s.sr[static_cast<Eigen::Index>(i)] / n - l_mean[i];

  std::vector<RunningStat> pixel(m), g_stats(m);
  RunningStat total;
  const CleanSampler clean = fixed_image(x);
  for_each_chunk(N, chunk_length(m), [&](std::size_t first, std::size_t count) {
    const Realizations r = realize(denoiser, clean, spec, alpha, rng, first, count);
    const Tensor ln = d.L.apply(r.n_hat);
    for (std::size_t k = 0; k < count; ++k) {
      double sq = 0.0;
      Tensor e(x.shape());
      for (std::size_t i = 0; i < m; ++i) {
        const double out = r.out[k * m + i];
        e[i] = out - d.g_of_x[i] - ln[k * m + i];
        sq += e[i] * e[i];
        pixel[i].add(e[i]);
        g_stats[i].add(out - ln[k * m + i]);
      }
      total.add(sq);
      if (first + k < options.retain) {
        d.retained_n_hat.push_back(batch_item(r.n_hat, k));
        d.retained_output.push_back(batch_item(r.out, k));
        d.residual_samples.push_back(std::move(e));
      }
    }
  });
  const double scale = n / (static_cast<double>(N - p) * static_cast<double>(m));
  d.eps2_per_pixel = total.mean * scale;
  d.eps2_standard_error = total.standard_error() * scale;
  d.residual_mean = Tensor(x.shape());
  d.residual_standard_error = Tensor(x.shape());
  d.g_standard_error = Tensor(x.shape());
  for (std::size_t i = 0; i < m; ++i) {
    d.residual_mean[i] = pixel[i].mean;
    d.residual_standard_error[i] = pixel[i].standard_error();
    d.g_standard_error[i] = g_stats[i].standard_error();
  }
  return d;
}

double zLz_statistic(const Denoiser& denoiser, const Tensor& x_const, const NoiseSpec& spec, double alpha,
                     std::size_t N, const SeededRng& rng, LMode mode) {
  check_image(x_const);
  const double v0 = x_const[0];
  for (double v : x_const.data())
    if (v != v0) throw ParameterError("zLz_statistic needs a constant image");
  DecompositionOptions opt;
  opt.mode = mode;
  const Decomposition d = residual_stats(denoiser, x_const, spec, alpha, N, rng, opt);
  return d.L.trace_weighted(auxiliary_variance(spec, x_const));
}

LinearityScatter export_scatter(const Denoiser& denoiser, const Tensor& x, const Decomposition& dec, std::size_t pixel,
                                const NoiseSpec& spec, double alpha, std::size_t N, const SeededRng& rng) {
  check_image(x);
  require_same_shape(x, dec.g_of_x, "export_scatter");
  const std::size_t m = x.size();
  if (pixel >= m) throw ParameterError("export_scatter: pixel index out of range");
  LinearityScatter sc;
  sc.pixel_index = pixel;
  sc.pairs.reserve(N);
  const SeededRng fresh = rng.split(0x5ca77e4);
  const CleanSampler clean = fixed_image(x);
  for_each_chunk(N, chunk_length(m), [&](std::size_t first, std::size_t count) {
    const Realizations r = realize(denoiser, clean, spec, alpha, fresh, first, count);
    const Tensor ln = dec.L.apply(r.n_hat);
    for (std::size_t k = 0; k < count; ++k)
      sc.pairs.emplace_back(ln[k * m + pixel], r.out[k * m + pixel] - dec.g_of_x[pixel]);
  });
  return sc;
}

void write_scatter_csv(const std::filesystem::path& path, const LinearityScatter& scatter, bool reference) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os.precision(17);
  os << "Ln_hat_i,R_minus_g_i" << (reference ? ",reference" : "") << '\n';
  for (const auto& [a, b] : scatter.pairs) {
    os << a << ',' << b;
    if (reference) os << ',' << a;
    os << '\n';
  }
  if (!os) throw FormatError("write failed: " + path.string());
}

std::string decomposition_report_json(const Decomposition& dec, std::optional<double> zLz) {
  nlohmann::json j;
  j["eps2_per_pixel"] = dec.eps2_per_pixel;
  j["eps2_standard_error"] = dec.eps2_standard_error;
  j["sample_count"] = dec.sample_count;
  j["L_mode"] = dec.L.mode == LMode::full ? "full" : "diagonal";
  j["pixels"] = dec.L.dim;
  double max_g_se = 0.0;
  for (double v : dec.g_standard_error.data()) max_g_se = std::max(max_g_se, v);
  j["g_max_standard_error"] = max_g_se;
  j["zLz"] = zLz ? nlohmann::json(*zLz) : nlohmann::json(nullptr);
  return j.dump(2);
}

}  // namespace pld
