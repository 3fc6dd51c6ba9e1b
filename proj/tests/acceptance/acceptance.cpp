// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: one PASS/FAIL line per criterion. Criterion 11 is a soft
// check and never affects the exit status.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pld/decomposition.hpp"
#include "pld/denoiser.hpp"
#include "pld/metrics.hpp"
#include "pld/runtime.hpp"
#include "pld/suites.hpp"
#include "pld/synthetic.hpp"
#include "pld/trainer.hpp"
#include "pld/variance.hpp"

namespace fs = std::filesystem;
using namespace pld;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  bool soft = false;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::uint64_t parameter_hash(const DenoiserModel& m) {
  std::uint64_t h = 1469598103934665603ull;
  for (const Tensor& p : m.parameters())
    for (double v : p.data()) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(&v);
      for (std::size_t i = 0; i < sizeof v; ++i) h = (h ^ bytes[i]) * 1099511628211ull;
    }
  return h;
}

bool all_pass(const std::vector<PropCheckReport>& reports) {
  for (const auto& r : reports)
    if (!r.skipped && !r.pass) return false;
  return !reports.empty();
}

std::string worst(const std::vector<PropCheckReport>& reports) {
  double ratio = 0.0;
  std::string name;
  for (const auto& r : reports)
    if (r.tolerance > 0 && std::abs(r.statistic) / r.tolerance >= ratio) {
      ratio = std::abs(r.statistic) / r.tolerance;
      name = r.name;
    }
  return fmt("worst |statistic|/tolerance %.3f (%s)", ratio, name.c_str());
}

// Desk-scale training data: a clean corpus with one fixed noisy realization
// per image, and a held-out evaluation set.
struct DeskData {
  std::vector<Tensor> clean;
  std::vector<Tensor> observed;
  EvalSet eval;
};

DeskData desk_data(std::uint64_t seed, const NoiseSpec& spec, const DeblurOperator* blur = nullptr) {
  const SeededRng root(seed);
  DeskData d;
  d.clean = synthetic_corpus(200, 32, root.split(1));
  const auto held = synthetic_corpus(50, 32, root.split(2));
  SeededRng nr = root.split(3);
  auto observe = [&](const Tensor& x, SeededRng& r) {
    const Tensor b = blur ? blur->apply(x) : x;
    return b + sample_noise(spec, b, r);
  };
  for (const Tensor& x : d.clean) d.observed.push_back(observe(x, nr));
  SeededRng er = root.split(4);
  for (const Tensor& x : held) {
    d.eval.clean.push_back(x);
    d.eval.inputs.push_back(observe(x, er));
  }
  return d;
}

struct DeskRun {
  double input_psnr = 0.0;
  double dpld_psnr = 0.0;
  double supervised_psnr = 0.0;
  DenoiserModel model;
  std::string report;
};

DeskRun desk_denoising(std::uint64_t seed, const NoiseSpec& spec, double gamma, const fs::path& out,
                       const std::string& tag) {
  const DeskData d = desk_data(seed, spec);
  TrainConfig c;
  c.noise = spec;
  c.gamma = gamma;
  c.seed = seed;
  c.log_interval = 500;
  const auto dpld = train_denoiser(c, d.observed, TrainOptions(&d.eval));
  TrainConfig s = c;
  s.mode = TrainConfig::Mode::supervised_baseline;
  const auto sup = train_denoiser(s, d.clean, TrainOptions(&d.eval));
  if (!out.empty()) {
    write_history_csv(out / (tag + "_dpld_history.csv"), dpld.history);
    write_history_csv(out / (tag + "_supervised_history.csv"), sup.history);
  }
  DeskRun r;
  r.input_psnr = evaluate_pairs(d.eval.inputs, d.eval.clean).psnr_db;
  r.dpld_psnr = evaluate_model(dpld.model, d.eval).psnr_db;
  r.supervised_psnr = evaluate_model(sup.model, d.eval).psnr_db;
  r.model = dpld.model;
  json j{{"seed", seed},
         {"noise", spec.describe()},
         {"input_psnr", r.input_psnr},
         {"dpld_psnr", r.dpld_psnr},
         {"supervised_psnr", r.supervised_psnr},
         {"dpld_parameter_hash", parameter_hash(dpld.model)},
         {"supervised_parameter_hash", parameter_hash(sup.model)}};
  r.report = j.dump();
  return r;
}

Outcome desk_outcome(const DeskRun& r) {
  const double gain = r.dpld_psnr - r.input_psnr, gap = r.supervised_psnr - r.dpld_psnr;
  return {gain >= 3.0 && gap <= 1.5,
          fmt("noisy %.2f dB, DPLD %.2f dB (gain %.2f >= 3), supervised %.2f dB (gap %.2f <= 1.5)", r.input_psnr,
              r.dpld_psnr, gain, r.supervised_psnr, gap)};
}

class Acceptance {
 public:
  Acceptance(std::uint64_t seed, fs::path out) : seed_(seed), out_(std::move(out)) {}

  Outcome c1() {
    const auto s = prop1_suite(seed_);
    prop1_json_ = s.to_json();
    return {s.pass(), fmt("%zu cases, ", s.reports.size()) + worst(s.reports)};
  }

  Outcome c2() {
    const auto s = remark2_suite(seed_);
    std::string d;
    for (const auto& r : s.reports)
      d += fmt("%s: measured %.4g vs 2*beta*tr(L Cov n) %.4g; ", r.name.c_str(), r.component("J_minus_MSE_minus_c"),
               r.component("expected_extra"));
    return {s.pass(), d + worst(s.reports)};
  }

  Outcome c3() {
    const auto reports = gradient_suite(seed_, 5);
    json j = json::array();
    std::string d;
    for (const auto& r : reports) {
      j.push_back(json::parse(r.to_json()));
      d += fmt("%s %.2e; ", r.name.c_str(), r.statistic);
    }
    gradients_json_ = j.dump();
    return {all_pass(reports), d + "max relative error <= 1e-4"};
  }

  Outcome c4() {
    const auto r = penalty_exactness(seed_, 100);
    return {r.pass, fmt("max penalty %.3g over %zu pairs, identity %s", r.statistic, r.sample_count,
                        r.pass ? "bitwise" : "violated")};
  }

  Outcome c5() {
    const auto s = decomposition_suite(seed_);
    const auto& lin = s.reports[0];
    const auto& rect = s.reports[1];
    return {s.pass(), fmt("0.7v: max |L-0.7I| %.2e, eps2/m %.2e; rectifier eps2/m %.5g vs quadrature %.5g (%.2f%%)",
                          lin.component("L_max_error"), lin.component("eps2_per_pixel"),
                          rect.component("eps2_per_pixel"), rect.component("quadrature"), 100 * rect.statistic)};
  }

  Outcome c6() {
    const auto s = example1_suite(seed_, out_);
    std::string d;
    bool csv = true;
    for (const auto& r : s.reports) {
      d += fmt("%s ratio %.3g; ", r.name.c_str(), r.statistic);
    }
    for (int k : {1, 2, 4}) csv = csv && (out_.empty() || fs::exists(out_ / fmt("example1_lambda%d.csv", k)));
    return {s.pass() && csv, d + (csv ? "scatter CSVs written" : "scatter CSV missing")};
  }

  Outcome c7() {
    const DeskRun r = desk_denoising(seed_, NoiseSpec::gaussian(25.0 / 255.0), 4.0, out_, "gaussian");
    gaussian_model_ = r.model;
    desk_json_ = r.report;
    return desk_outcome(r);
  }

  Outcome c8() { return desk_outcome(desk_denoising(seed_, NoiseSpec::poisson(30.0), 16.0, out_, "poisson")); }

  Outcome c9() {
    const auto s = corollary_suite(seed_);
    const auto& r = s.reports[0];
    return {s.pass(), fmt("delta %.2e, lhs %.4g <= bound %.4g (slack %.3g)", r.component("delta"),
                          r.component("lhs"), r.component("bound"), r.component("slack"))};
  }

  Outcome c10() {
    const SeededRng root(seed_);
    // Gaussian: large flat blocks at several levels; pixels next to block
    // edges that slip through the flatness mask bias V upwards.
    const double sigma = 0.05;
    std::vector<VarianceCurve> curves;
    for (std::size_t k = 0; k < 10; ++k) {
      SeededRng r = root.split(100 + k);
      const Tensor x = block_image(256, 256, 64, r, 0.2, 0.8);
      curves.push_back(binned_variance(x + gaussian_samples(r, x.shape(), 0.0, sigma)));
    }
    const VarianceCurve g = merge_curves(curves);
    const LinearFit gf = fit_linear(g);
    double vbar = 0.0, n = 0.0;
    for (const auto& b : g.bins) {
      vbar += b.count * b.intensity;
      n += static_cast<double>(b.count);
    }
    const double s2 = gf.intercept + gf.slope * vbar / n;
    const double g_err = std::abs(s2 / (sigma * sigma) - 1);

    // Multi-frame: 10 frames, 10^5 pixels.
    SeededRng fr = root.split(200);
    const Tensor x = block_image(100, 1000, 20, fr, 0.2, 0.8);
    std::vector<Tensor> frames;
    for (int j = 0; j < 10; ++j) frames.push_back(x + gaussian_samples(fr, x.shape(), 0.0, sigma));
    const double mf_err = std::abs(mean(multiframe_variance(frames)) / (10 * sigma * sigma) - 1);

    // Poisson: slope 1/lambda.
    const double lambda = 69.0;
    std::vector<VarianceCurve> pc;
    for (std::size_t k = 0; k < 10; ++k) {
      SeededRng r = root.split(300 + k);
      const Tensor xp = block_image(256, 256, 64, r, 0.1, 0.9);
      pc.push_back(binned_variance(xp + sample_noise(NoiseSpec::poisson(lambda), xp, r)));
    }
    const VarianceCurve p = merge_curves(pc);
    const LinearFit pf = fit_linear(p);
    const double p_err = std::abs(pf.lambda / lambda - 1);
    if (!out_.empty()) {
      write_curve_csv(out_ / "variance_gaussian.csv", g);
      write_curve_csv(out_ / "variance_poisson.csv", p);
    }
    return {g_err <= 0.10 && mf_err <= 0.03 && p_err <= 0.10,
            fmt("sigma^2 %.5g vs %.5g (%.1f%%); multiframe %.2f%% off n*sigma^2; lambda %.2f vs %.0f (%.1f%%)", s2,
                sigma * sigma, 100 * g_err, 100 * mf_err, pf.lambda, lambda, 100 * p_err)};
  }

  Outcome c11() {
    const double sigma = 25.0 / 255.0;
    if (!gaussian_model_) {
      const DeskData d = desk_data(seed_, NoiseSpec::gaussian(sigma));
      TrainConfig c;
      c.noise = NoiseSpec::gaussian(sigma);
      c.seed = seed_;
      gaussian_model_ = train_denoiser(c, d.observed).model;
    }
    const DeskData d = desk_data(seed_, NoiseSpec::gaussian(sigma));
    const Tensor x_const = Tensor::image(16, 16, 0.5);
    int monotone = 0;
    std::string d_str;
    for (std::uint64_t run = 0; run < 5; ++run) {
      std::vector<double> stats;
      for (double beta : {-0.16, 0.0, 0.16}) {
        TrainConfig c;
        c.noise = NoiseSpec::gaussian(sigma).with_aux_scale(1 + beta);
        c.seed = seed_ * 1000 + run;
        c.stage1_steps = 0;
        c.stage2_steps = kTrendSteps;
        c.lr_schedule = {{0, kTrendLr}};
        c.log_interval = kTrendSteps;
        TrainOptions opt;
        opt.init = &*gaussian_model_;
        const auto tuned = train_denoiser(c, d.observed, opt);
        stats.push_back(zLz_statistic(model_denoiser(tuned.model), x_const, NoiseSpec::gaussian(sigma), 0.5, 2000,
                                      SeededRng(seed_).split(7000 + run)));
      }
      const bool dec = stats[0] > stats[1] && stats[1] > stats[2];
      monotone += dec;
      d_str += fmt("[%.4g %.4g %.4g]%s ", stats[0], stats[1], stats[2], dec ? "" : "*");
    }
    return {monotone >= 4, fmt("monotone decreasing in %d/5 runs: ", monotone) + d_str, true};
  }

  Outcome c12() {
    const DeblurOperator blur = DeblurOperator::box(3);
    const auto spec = NoiseSpec::gaussian(2.0 / 255.0);
    const DeskData d = desk_data(seed_, spec, &blur);
    TrainConfig c = TrainConfig::deblur_defaults();
    c.seed = seed_;
    c.log_interval = 500;
    const auto r = train_deblur(c, d.observed, blur, TrainOptions(&d.eval));
    if (!out_.empty()) write_history_csv(out_ / "deblur_history.csv", r.history);
    const double in = evaluate_pairs(d.eval.inputs, d.eval.clean).psnr_db;
    const double outp = evaluate_model(r.model, d.eval).psnr_db;
    return {outp - in >= 2.0, fmt("blurred %.2f dB, restored %.2f dB (gain %.2f >= 2)", in, outp, outp - in)};
  }

  Outcome c13() {
    Acceptance again(seed_, {});
    again.c1();
    again.c3();
    again.c7();
    const bool p1 = again.prop1_json_ == prop1_json_, p3 = again.gradients_json_ == gradients_json_,
               p7 = again.desk_json_ == desk_json_;
    return {p1 && p3 && p7, fmt("criterion 1 %s, criterion 3 %s, criterion 7 %s", p1 ? "identical" : "DIFFERS",
                                p3 ? "identical" : "DIFFERS", p7 ? "identical" : "DIFFERS")};
  }

  bool has_reports_for_13() const { return !prop1_json_.empty() && !gradients_json_.empty() && !desk_json_.empty(); }

  static constexpr std::size_t kTrendSteps = 300;
  static constexpr double kTrendLr = 1e-4;

 private:
  std::uint64_t seed_;
  fs::path out_;
  std::string prop1_json_, gradients_json_, desk_json_;
  std::optional<DenoiserModel> gaussian_model_;
};

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Acceptance suite"};
  std::vector<int> only;
  std::uint64_t seed = 1;
  fs::path out = "acceptance_artifacts";
  app.add_option("--only", only, "Criteria to run (default: all)")->delimiter(',')->check(CLI::Range(1, 13));
  app.add_option("--seed", seed, "Seed");
  app.add_option("--out", out, "Artifact directory");
  CLI11_PARSE(app, argc, argv);
  configure_threads(1);
  fs::create_directories(out);

  std::set<int> run(only.begin(), only.end());
  if (run.empty())
    for (int k = 1; k <= 13; ++k) run.insert(k);
  Acceptance a(seed, out);
  const std::map<int, std::pair<const char*, std::function<Outcome()>>> criteria{
      {1, {"unsupervised vs supervised risk equivalence", [&] { return a.c1(); }}},
      {2, {"mis-specified auxiliary variance", [&] { return a.c2(); }}},
      {3, {"loss gradients vs finite differences", [&] { return a.c3(); }}},
      {4, {"partial-linearity penalty exactness", [&] { return a.c4(); }}},
      {5, {"decomposition sanity", [&] { return a.c5(); }}},
      {6, {"constant-patch Poisson posterior mean", [&] { return a.c6(); }}},
      {7, {"desk-scale DPLD training, Gaussian", [&] { return a.c7(); }}},
      {8, {"desk-scale DPLD training, Poisson", [&] { return a.c8(); }}},
      {9, {"scalar-gain suboptimality bound", [&] { return a.c9(); }}},
      {10, {"noise-variance estimation", [&] { return a.c10(); }}},
      {11, {"<z,Lz> trend across variance scalings (soft)", [&] { return a.c11(); }}},
      {12, {"desk-scale deblurring", [&] { return a.c12(); }}},
      {13, {"single-thread determinism of 1, 3, 7", [&] {
              // The first pass must exist before it can be repeated.
              if (!a.has_reports_for_13()) {
                a.c1();
                a.c3();
                a.c7();
              }
              return a.c13();
            }}},
  };

  int failures = 0;
  for (int k : run) {
    const auto& [title, fn] = criteria.at(k);
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), k == 11};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d  %s: %s [%.1f s]%s\n", o.pass ? "PASS" : "FAIL", k, title, o.detail.c_str(), sec,
                (!o.pass && o.soft) ? " (soft check: warning only)" : "");
    std::fflush(stdout);
    if (!o.pass && !o.soft) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
