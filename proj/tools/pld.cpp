// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exit codes: 0 success, 1 failed checks or runtime
// errors, 2 usage errors.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "pld/config.hpp"
#include "pld/decomposition.hpp"
#include "pld/denoiser.hpp"
#include "pld/io.hpp"
#include "pld/runtime.hpp"
#include "pld/suites.hpp"
#include "pld/trainer.hpp"
#include "pld/variance.hpp"

namespace fs = std::filesystem;
using namespace pld;
using nlohmann::json;

namespace {

constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

void write_image(const fs::path& path, const Tensor& image) {
  if (path.extension() == ".pgm") write_pgm(path, image);
  else write_tensor(path, image);
}

int cmd_train(const fs::path& config_path, bool deblur) {
  RunConfig rc = load_run_config(config_path);
  const bool is_deblur = rc.train.mode == TrainConfig::Mode::deblur;
  if (deblur != is_deblur)
    throw ParameterError(deblur ? "deblur-train needs mode \"deblur\"" : "train does not accept mode \"deblur\"; use deblur-train");
  if (rc.corpus.empty()) throw ParameterError("paths.corpus is required");
  if (rc.output.empty()) throw ParameterError("paths.output is required");
  const std::vector<Tensor> corpus = load_images(rc.corpus);
  EvalSet eval;
  if (!rc.eval_inputs.empty()) {
    eval.inputs = load_images(rc.eval_inputs);
    eval.clean = load_images(rc.eval_clean);
  }
  std::optional<DenoiserModel> init;
  if (!rc.init.empty()) init = load_checkpoint(rc.init);
  fs::create_directories(rc.output);
  const TrainOptions opt(eval.empty() ? nullptr : &eval, init ? &*init : nullptr, rc.output);
  TrainResult r;
  if (is_deblur) {
    if (rc.kernel.empty()) throw ParameterError("paths.kernel is required for deblur-train");
    Tensor k = read_tensor(rc.kernel);
    r = train_deblur(rc.train, corpus, DeblurOperator(std::move(k)), opt);
  } else {
    r = train_denoiser(rc.train, corpus, opt);
  }
  save_checkpoint(rc.output / "checkpoint", r.model);
  write_history_csv(rc.output / "history.csv", r.history);
  {
    std::ofstream f(rc.output / "config.json");
    f << run_config_json(rc) << '\n';
  }
  json summary{{"checkpoint", (rc.output / "checkpoint").string()},
               {"history", (rc.output / "history.csv").string()},
               {"seed", rc.train.seed},
               {"steps", r.model.step}};
  if (!r.history.empty()) {
    summary["final_loss"] = r.history.back().loss;
    if (!std::isnan(r.history.back().psnr)) summary["final_psnr"] = r.history.back().psnr;
  }
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_apply(const fs::path& model_path, const fs::path& in, const fs::path& out, const fs::path& kernel) {
  const DenoiserModel model = load_checkpoint(model_path);
  const Tensor y = read_image_any(in);
  const Tensor x = model.forward(y);
  write_image(out, x);
  json report{{"model", model_path.string()}, {"input", in.string()}, {"output", out.string()}};
  if (!kernel.empty()) {
    // Data consistency of the restored image under the stated blur.
    const DeblurOperator a(read_tensor(kernel));
    report["reblur_mse"] = squared_norm(a.apply(x) - y) / static_cast<double>(y.size());
  }
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_decompose(const fs::path& model_path, const fs::path& clean, const std::string& noise, std::size_t samples,
                  double alpha, const std::string& mode, std::uint64_t seed, const fs::path& out, long pixel) {
  const DenoiserModel model = load_checkpoint(model_path);
  const Tensor x = read_image_any(clean);
  const NoiseSpec spec = parse_noise_spec(noise);
  if (mode != "diagonal" && mode != "full") throw ParameterError("--mode must be diagonal or full");
  const Denoiser r = model_denoiser(model);
  const SeededRng rng(seed);
  const Decomposition d =
      residual_stats(r, x, spec, alpha, samples, rng, {mode == "full" ? LMode::full : LMode::diagonal});
  fs::create_directories(out);
  const std::size_t px = pixel >= 0 ? static_cast<std::size_t>(pixel) : x.size() / 2;
  if (px >= x.size()) throw ParameterError("--pixel is outside the image");
  write_scatter_csv(out / "scatter.csv", export_scatter(r, x, d, px, spec, alpha, std::min<std::size_t>(samples, 2000), rng),
                    true);
  json report = json::parse(decomposition_report_json(d));
  report["seed"] = seed;
  report["noise"] = spec.describe();
  report["alpha"] = alpha;
  report["scatter_pixel"] = px;
  std::ofstream(out / "decomposition.json") << report.dump(2) << '\n';
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_estimate_noise(const std::string& in, const std::string& frames, const fs::path& out) {
  fs::create_directories(out);
  json report;
  if (!frames.empty()) {
    const std::vector<Tensor> stack = load_images(frames);
    const Tensor v = multiframe_variance(stack);
    write_tensor(out / "variance.pldt", v);
    report["frames"] = stack.size();
    report["mean_variance"] = mean(v);
    report["variance_map"] = (out / "variance.pldt").string();
  }
  if (!in.empty()) {
    std::vector<VarianceCurve> curves;
    for (const Tensor& y : load_images(in)) curves.push_back(binned_variance(y));
    const VarianceCurve curve = merge_curves(curves);
    write_curve_csv(out / "variance_curve.csv", curve);
    report["curve"] = (out / "variance_curve.csv").string();
    try {
      const LinearFit fit = fit_linear(curve);
      report["fit"] = {{"slope", fit.slope},   {"intercept", fit.intercept},         {"mu", fit.mu},
                       {"lambda", std::isfinite(fit.lambda) ? json(fit.lambda) : json("inf")},
                       {"residual_rms", fit.residual_rms}};
    } catch (const EstimationError& e) {
      report["fit_error"] = e.what();
    }
  }
  if (frames.empty() && in.empty()) throw ParameterError("estimate-noise needs --in or --frames");
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const fs::path& out) {
  std::vector<std::string> names;
  if (suite == "all") names = suite_names();
  else names.push_back(suite);
  if (!out.empty()) fs::create_directories(out);
  json all = json::array();
  bool ok = true;
  for (const auto& n : names) {
    const SuiteResult r = run_suite(n, seed, out);
    ok = ok && r.pass();
    all.push_back(json::parse(r.to_json()));
    std::cerr << (r.pass() ? "PASS " : "FAIL ") << n << '\n';
  }
  const std::string text = (names.size() == 1 ? all[0] : all).dump(2);
  std::cout << text << '\n';
  if (!out.empty()) std::ofstream(out / ("verify_" + suite + ".json")) << text << '\n';
  return ok ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Partially linear denoisers: training, inference and diagnostics"};
  app.require_subcommand(1);
  std::optional<int> threads;
  app.add_option("--threads", threads, "OpenMP threads (default: PLD_THREADS, else all cores)")->check(CLI::PositiveNumber);

  fs::path config;
  auto* train = app.add_subcommand("train", "Train a denoiser from a JSON run config");
  train->add_option("--config", config, "Run config")->required()->check(CLI::ExistingFile);
  auto* dtrain = app.add_subcommand("deblur-train", "Train a deblurring network from a JSON run config");
  dtrain->add_option("--config", config, "Run config")->required()->check(CLI::ExistingFile);

  fs::path model, in_path, out_path, kernel;
  auto* denoise = app.add_subcommand("denoise", "Apply a trained model to an image");
  denoise->add_option("--model", model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  denoise->add_option("--in", in_path, "Input PGM or PLDT")->required()->check(CLI::ExistingFile);
  denoise->add_option("--out", out_path, "Output (.pgm or PLDT)")->required();
  auto* deblur = app.add_subcommand("deblur", "Apply a trained deblurring model to an image");
  deblur->add_option("--model", model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  deblur->add_option("--in", in_path, "Input PGM or PLDT")->required()->check(CLI::ExistingFile);
  deblur->add_option("--out", out_path, "Output (.pgm or PLDT)")->required();
  deblur->add_option("--kernel", kernel, "Blur kernel PLDT; reports the re-blur residual")->check(CLI::ExistingFile);

  fs::path clean;
  std::string noise, lmode = "diagonal";
  std::size_t samples = 10000;
  double alpha = 0.0;
  std::uint64_t seed = 1;
  long pixel = -1;
  fs::path out_dir = ".";
  auto* decompose = app.add_subcommand("decompose", "Partially linear decomposition of a model at a clean image");
  decompose->add_option("--model", model, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
  decompose->add_option("--clean", clean, "Clean image")->required()->check(CLI::ExistingFile);
  decompose->add_option("--noise", noise, "gaussian:SIGMA | poisson:LAMBDA | var:PATH [,aux=SCALE]")->required();
  decompose->add_option("--samples", samples, "Noise realizations")->check(CLI::PositiveNumber);
  decompose->add_option("--alpha", alpha, "Auxiliary weight alpha");
  decompose->add_option("--mode", lmode, "L structure: diagonal or full");
  decompose->add_option("--seed", seed, "Seed");
  decompose->add_option("--pixel", pixel, "Flat pixel index for the scatter CSV (default: centre)");
  decompose->add_option("--out", out_dir, "Output directory");

  std::string in_glob, frames_glob;
  auto* estimate = app.add_subcommand("estimate-noise", "Noise variance from single images or repeated frames");
  estimate->add_option("--in", in_glob, "Images (directory or glob) for the intensity-variance curve");
  estimate->add_option("--frames", frames_glob, "Repeated frames (directory or glob) for per-pixel variance");
  estimate->add_option("--out", out_dir, "Output directory");

  std::string suite = "all";
  fs::path verify_out;
  auto* verify = app.add_subcommand("verify", "Run the verification suite");
  verify->add_option("--suite", suite, "Suite")
      ->check(CLI::IsMember({"prop1", "remark2", "prop2", "decomposition", "corollary", "example1", "gradients", "all"}));
  verify->add_option("--seed", seed, "Seed");
  verify->add_option("--out", verify_out, "Directory for report JSON and CSV artifacts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    configure_threads(threads);
    if (*train) return cmd_train(config, false);
    if (*dtrain) return cmd_train(config, true);
    if (*denoise) return cmd_apply(model, in_path, out_path, {});
    if (*deblur) return cmd_apply(model, in_path, out_path, kernel);
    if (*decompose) return cmd_decompose(model, clean, noise, samples, alpha, lmode, seed, out_dir, pixel);
    if (*estimate) return cmd_estimate_noise(in_glob, frames_glob, out_dir);
    if (*verify) return cmd_verify(suite, seed, verify_out);
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFail;
  }
  return kExitUsage;
}
