// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/variance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "pld/decomposition.hpp"
#include "pld/errors.hpp"

namespace pld {

namespace {

void check_gray(const Tensor& y, std::size_t min_extent, const char* what) {
  if (y.rank() != 3 || y.extent(0) != 1) throw ParameterError(std::string(what) + ": expects a (1,H,W) image");
  if (y.extent(1) < min_extent || y.extent(2) < min_extent)
    throw ParameterError(std::string(what) + ": image must be at least " + std::to_string(min_extent) + " pixels wide");
}

}  // namespace

Tensor neighbor_diff_map(const Tensor& y) {
  check_gray(y, 2, "neighbor_diff_map");
  const std::size_t h = y.extent(1), w = y.extent(2);
  Tensor d(y.shape());
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double v = y[r * w + c];
      double acc = 0.0;
      int n = 0;
      auto add = [&](std::size_t rr, std::size_t cc) {
        const double diff = v - y[rr * w + cc];
        acc += diff * diff;
        ++n;
      };
      if (r > 0) add(r - 1, c);
      if (r + 1 < h) add(r + 1, c);
      if (c > 0) add(r, c - 1);
      if (c + 1 < w) add(r, c + 1);
      d[r * w + c] = acc / (2.0 * n);
    }
  }
  return d;
}

Tensor box_mean(const Tensor& y, std::size_t window) {
  check_gray(y, 1, "box_mean");
  if (window == 0) throw ParameterError("box_mean: window must be positive");
  const std::size_t h = y.extent(1), w = y.extent(2);
  // Summed-area table with a zero first row and column.
  std::vector<double> sat((h + 1) * (w + 1), 0.0);
  for (std::size_t r = 0; r < h; ++r) {
    double row = 0.0;
    for (std::size_t c = 0; c < w; ++c) {
      row += y[r * w + c];
      sat[(r + 1) * (w + 1) + c + 1] = sat[r * (w + 1) + c + 1] + row;
    }
  }
  const std::size_t before = (window - 1) / 2, after = window / 2;
  Tensor s(y.shape());
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t r0 = r >= before ? r - before : 0, r1 = std::min(h, r + after + 1);
    for (std::size_t c = 0; c < w; ++c) {
      const std::size_t c0 = c >= before ? c - before : 0, c1 = std::min(w, c + after + 1);
      const double total = sat[r1 * (w + 1) + c1] - sat[r0 * (w + 1) + c1] - sat[r1 * (w + 1) + c0] +
                           sat[r0 * (w + 1) + c0];
      s[r * w + c] = total / static_cast<double>((r1 - r0) * (c1 - c0));
    }
  }
  return s;
}

std::size_t SmoothMask::count() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true)); }

SmoothMask smooth_mask(const Tensor& y) {
  check_gray(y, kSmoothWindow, "smooth_mask");
  SmoothMask out;
  out.s = box_mean(y);
  Tensor dev(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dev[i] = (out.s[i] - y[i]) * (out.s[i] - y[i]);
  out.f = box_mean(dev);
  const double smin = min_value(out.s);
  out.mask.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out.mask[i] = out.f[i] <= kSmoothThreshold * (out.s[i] - smin);
  return out;
}

VarianceCurve binned_variance(const Tensor& y, const Tensor& s, const std::vector<bool>& F, const Tensor& d2) {
  require_same_shape(y, s, "binned_variance");
  require_same_shape(y, d2, "binned_variance");
  if (F.size() != y.size()) throw ParameterError("binned_variance: mask size mismatch");
  const std::size_t selected = static_cast<std::size_t>(std::count(F.begin(), F.end(), true));
  if (selected == 0)
    throw EstimationError("binned_variance: smooth-region mask is empty (" + std::to_string(y.size()) +
                          " pixels, none below the flatness threshold)");
  std::vector<double> sums(256, 0.0);
  std::vector<std::size_t> counts(256, 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!F[i]) continue;
    const double k = std::nearbyint(s[i] * 255.0);
    if (k < 0.0 || k > 255.0) continue;
    if (!(std::abs(s[i] - k / 255.0) < 0.5 / 255.0)) continue;
    const auto b = static_cast<std::size_t>(k);
    sums[b] += d2[i];
    ++counts[b];
  }
  VarianceCurve curve;
  for (std::size_t b = 0; b < 256; ++b)
    if (counts[b] > 0) curve.bins.push_back({static_cast<double>(b) / 255.0, sums[b] / static_cast<double>(counts[b]), counts[b]});
  if (curve.bins.empty()) throw EstimationError("binned_variance: smooth pixels all fall outside [0, 1]");
  return curve;
}

VarianceCurve binned_variance(const Tensor& y) {
  const SmoothMask sm = smooth_mask(y);
  return binned_variance(y, sm.s, sm.mask, neighbor_diff_map(y));
}

VarianceCurve merge_curves(std::span<const VarianceCurve> curves) {
  std::vector<double> sums(256, 0.0);
  std::vector<std::size_t> counts(256, 0);
  for (const auto& c : curves) {
    for (const auto& b : c.bins) {
      const auto k = static_cast<std::size_t>(std::nearbyint(b.intensity * 255.0));
      sums[k] += b.variance * static_cast<double>(b.count);
      counts[k] += b.count;
    }
  }
  VarianceCurve out;
  for (std::size_t b = 0; b < 256; ++b)
    if (counts[b] > 0) out.bins.push_back({static_cast<double>(b) / 255.0, sums[b] / static_cast<double>(counts[b]), counts[b]});
  return out;
}

double LinearFit::operator()(double v) const { return std::max(0.0, intercept + slope * v); }

LinearFit fit_linear(const VarianceCurve& curve) {
  if (curve.bins.size() < 2) throw EstimationError("fit_linear needs at least two populated bins");
  double sw = 0, sv = 0, sV = 0;
  for (const auto& b : curve.bins) {
    const double w = static_cast<double>(b.count);
    sw += w;
    sv += w * b.intensity;
    sV += w * b.variance;
  }
  const double mv = sv / sw, mV = sV / sw;
  double svv = 0, svV = 0;
  for (const auto& b : curve.bins) {
    const double w = static_cast<double>(b.count);
    svv += w * (b.intensity - mv) * (b.intensity - mv);
    svV += w * (b.intensity - mv) * (b.variance - mV);
  }
  if (!(svv > 0.0)) throw EstimationError("fit_linear: all bins share one intensity");
  LinearFit f;
  f.slope = svV / svv;
  f.intercept = mV - f.slope * mv;
  if (f.slope > 0.0) {
    f.lambda = 1.0 / f.slope;
    f.mu = -f.intercept / f.slope;
  }
  double rss = 0;
  for (const auto& b : curve.bins) {
    const double r = b.variance - (f.intercept + f.slope * b.intensity);
    rss += static_cast<double>(b.count) * r * r;
  }
  f.residual_rms = std::sqrt(rss / sw);
  return f;
}

Tensor multiframe_variance(std::span<const Tensor> frames) {
  if (frames.size() < 2) throw ParameterError("multiframe_variance needs at least two frames");
  for (const auto& f : frames) require_same_shape(frames[0], f, "multiframe_variance");
  const double n = static_cast<double>(frames.size());
  Tensor total(frames[0].shape());
  for (const auto& f : frames) total += f;
  Tensor v(total.shape());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double share = total[i] / n;
    double acc = 0.0;
    for (const auto& f : frames) acc += (f[i] - share) * (f[i] - share);
    v[i] = n / (n - 1.0) * acc;
  }
  return v;
}

void write_curve_csv(const std::filesystem::path& path, const VarianceCurve& curve) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot write " + path.string());
  os.precision(17);
  os << "intensity,variance,count\n";
  for (const auto& b : curve.bins) os << b.intensity << ',' << b.variance << ',' << b.count << '\n';
  if (!os) throw FormatError("write failed: " + path.string());
}

std::string RefineReport::to_json() const {
  nlohmann::json j;
  j["chosen"] = chosen;
  j["all_negative"] = all_negative;
  j["monotone_decreasing"] = monotone_decreasing;
  j["table"] = nlohmann::json::array();
  for (const auto& e : table) j["table"].push_back({{"candidate", e.candidate}, {"zLz", e.statistic}});
  return j.dump(2);
}

RefineReport refine_lambda(const std::function<Denoiser(double)>& fine_tune,
                           const std::function<NoiseSpec(double)>& spec_for, std::span<const double> candidates,
                           const Tensor& x_const, double alpha, std::size_t N, const SeededRng& rng) {
  if (candidates.empty()) throw ParameterError("refine_lambda needs at least one candidate");
  RefineReport rep;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Denoiser d = fine_tune(candidates[i]);
    const double stat = zLz_statistic(d, x_const, spec_for(candidates[i]), alpha, N, rng.split(i));
    rep.table.push_back({candidates[i], stat});
  }
  rep.monotone_decreasing = true;
  for (std::size_t i = 1; i < rep.table.size(); ++i)
    if (!(rep.table[i].statistic < rep.table[i - 1].statistic)) rep.monotone_decreasing = false;
  const RefineEntry* best = nullptr;
  for (const auto& e : rep.table)
    if (e.statistic > 0.0 && (!best || e.statistic < best->statistic)) best = &e;
  if (!best) {
    rep.all_negative = true;
    best = &*std::max_element(rep.table.begin(), rep.table.end(),
                              [](const RefineEntry& a, const RefineEntry& b) { return a.statistic < b.statistic; });
  }
  rep.chosen = best->candidate;
  return rep;
}

}  // namespace pld
