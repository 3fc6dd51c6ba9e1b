// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>

#include "pld/optim.hpp"

namespace pld {

PatchStream::PatchStream(const std::vector<Tensor>& corpus, std::size_t patch_height, std::size_t patch_width,
                         bool flips)
    : ph_(patch_height), pw_(patch_width), flips_(flips) {
  if (ph_ == 0 || pw_ == 0) throw ParameterError("PatchStream: patch size must be positive");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Tensor& im = corpus[i];
    if (im.rank() != 3) throw ParameterError("PatchStream: corpus images must be (C,H,W)");
    if (im.height() < ph_ || im.width() < pw_) {
      std::cerr << "warning: skipping corpus image " << i << " (" << shape_string(im.shape())
                << ") smaller than the patch\n";
      continue;
    }
    images_.push_back(&im);
  }
  if (images_.empty()) throw ParameterError("PatchStream: no corpus image is at least the patch size");
}

Tensor PatchStream::draw(SeededRng& rng) const {
  const Tensor& im = *images_[rng.below(images_.size())];
  const std::size_t top = rng.below(im.height() - ph_ + 1);
  const std::size_t left = rng.below(im.width() - pw_ + 1);
  const bool fh = rng.coin();
  const bool fv = rng.coin();
  Tensor patch = crop(im, top, left, ph_, pw_);
  return flips_ ? augment(patch, fh, fv) : patch;
}

Tensor PatchStream::augment(const Tensor& patch, bool flip_h, bool flip_v) {
  Tensor out = patch;
  if (flip_h) flip_horizontal(out);
  if (flip_v) flip_vertical(out);
  return out;
}

std::vector<std::pair<std::size_t, double>> TrainConfig::desk_schedule() const {
  std::vector<std::pair<std::size_t, double>> s{{0, 1e-3}};
  auto add_drop = [&s](std::size_t begin, std::size_t length) {
    const std::size_t drop = begin + (length * 6) / 10;
    if (drop > s.back().first) s.emplace_back(drop, 1e-4);
  };
  add_drop(0, stage1_steps);
  if (stage2_steps > 0 && stage1_steps > 0) s.emplace_back(stage1_steps, 1e-3);
  add_drop(stage1_steps, stage2_steps);
  return s;
}

std::vector<std::pair<std::size_t, double>> TrainConfig::resolved_schedule() const {
  return lr_schedule.empty() ? desk_schedule() : lr_schedule;
}

double TrainConfig::lr_at(std::size_t step) const {
  const auto s = resolved_schedule();
  double lr = s.front().second;
  for (const auto& [from, value] : s)
    if (from <= step) lr = value;
  return lr;
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw ParameterError("TrainConfig: batch_size must be positive");
  if (patch_height == 0 || patch_width == 0) throw ParameterError("TrainConfig: patch size must be positive");
  for (std::size_t i = 0; i < lr_schedule.size(); ++i) {
    const auto& [step, lr] = lr_schedule[i];
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ParameterError("TrainConfig: learning rates must be positive");
    if (i == 0 && step != 0) throw ParameterError("TrainConfig: lr_schedule must start at step 0");
    if (i > 0 && step <= lr_schedule[i - 1].first)
      throw ParameterError("TrainConfig: lr_schedule steps must be strictly increasing");
  }
  auto [lo, hi] = alpha_stage2_range;
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi))
    throw ParameterError("TrainConfig: alpha_stage2_range must satisfy 0 < lo <= hi");
  if (!(alpha_stage1 > 0.0) || !std::isfinite(alpha_stage1))
    throw ParameterError("TrainConfig: alpha_stage1 must be positive");
  if (!(gamma >= 0.0) || !(gamma_prox >= 0.0) || !std::isfinite(gamma) || !std::isfinite(gamma_prox))
    throw ParameterError("TrainConfig: gamma and gamma_prox must be nonnegative");
  if (log_interval == 0) throw ParameterError("TrainConfig: log_interval must be positive");
  if (prox_kernel_size % 2 == 0) throw ParameterError("TrainConfig: prox_kernel_size must be odd");
  noise.validate();
  model.validate();
}

TrainConfig TrainConfig::deblur_defaults() {
  TrainConfig c;
  c.mode = Mode::deblur;
  c.alpha_stage2_range = {0.1, 0.2};
  c.gamma = 1.0 / 16.0;
  c.gamma_prox = 1.0 / 16.0;
  c.noise = NoiseSpec::gaussian(2.0 / 255.0);
  return c;
}

const char* mode_name(TrainConfig::Mode mode) {
  switch (mode) {
    case TrainConfig::Mode::denoise: return "denoise";
    case TrainConfig::Mode::deblur: return "deblur";
    case TrainConfig::Mode::supervised_baseline: return "supervised_baseline";
  }
  return "?";
}

TrainConfig::Mode parse_mode(const std::string& name) {
  if (name == "denoise") return TrainConfig::Mode::denoise;
  if (name == "deblur") return TrainConfig::Mode::deblur;
  if (name == "supervised_baseline") return TrainConfig::Mode::supervised_baseline;
  throw ParameterError("unknown training mode '" + name + "'");
}

MetricsReport evaluate_model(const DenoiserModel& model, const EvalSet& eval) {
  if (eval.inputs.size() != eval.clean.size()) throw ParameterError("EvalSet: inputs and clean differ in count");
  std::vector<Tensor> out;
  out.reserve(eval.inputs.size());
  for (const Tensor& in : eval.inputs) out.push_back(model.forward(in));
  return evaluate_pairs(out, eval.clean);
}

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& history) {
  std::ofstream f(path);
  if (!f) throw FormatError("cannot write " + path.string());
  f << "step,loss,psnr,ssim\n" << std::setprecision(10);
  for (const HistoryRow& r : history) {
    f << r.step << ',' << r.loss << ',';
    if (!std::isnan(r.psnr)) f << r.psnr;
    f << ',';
    if (!std::isnan(r.ssim)) f << r.ssim;
    f << '\n';
  }
  if (!f) throw FormatError("write failed: " + path.string());
}

namespace {

bool flip_symmetric(const Tensor& k) {
  Tensor h = k, v = k;
  flip_horizontal(h);
  flip_vertical(v);
  return h == k && v == k;
}

struct Prepared {
  std::vector<CorruptedSample> samples;
  std::vector<PerturbationPair> pairs;
  std::vector<Tensor> n_prox;
};

TrainResult run_training(const TrainConfig& c, const std::vector<Tensor>& corpus, const DeblurOperator* blur,
                         const TrainOptions& opt) {
  c.validate();
  const bool deblur = blur != nullptr;
  const bool supervised = c.mode == TrainConfig::Mode::supervised_baseline;
  const SeededRng root(c.seed);
  TrainResult result;
  if (opt.init) {
    result.model = *opt.init;
    if (!(result.model.config() == c.model)) throw ParameterError("initial model architecture differs from config");
  } else {
    SeededRng init_rng = root.split(1);
    result.model = DenoiserModel::initialized(c.model, init_rng);
  }
  DenoiserModel& model = result.model;
  model.seed = c.seed;
  if (c.total_steps() == 0) return result;

  const PatchStream stream(corpus, c.patch_height, c.patch_width, !deblur || flip_symmetric(blur->kernel()));
  const SeededRng data_root = root.split(2);
  AdamState adam;
  const std::size_t first = static_cast<std::size_t>(model.step);
  double loss_acc = 0.0;
  std::size_t loss_n = 0;

  for (std::size_t step = first; step < first + c.total_steps(); ++step) {
    const std::size_t local = step - first;
    const bool stage2 = local >= c.stage1_steps;
    const double gamma = (stage2 && !supervised) ? c.gamma : 0.0;
    const double gamma_prox = (stage2 && deblur) ? c.gamma_prox : 0.0;
    const SeededRng step_rng = data_root.split(step);
    const std::size_t B = c.batch_size;
    Prepared prep;
    prep.samples.resize(B);
    if (gamma > 0.0) prep.pairs.resize(B);
    if (gamma_prox > 0.0) prep.n_prox.resize(B);

    // Each item draws from its own substream, so the batch is independent
    // of the thread count.
#pragma omp parallel for schedule(static)
    for (std::size_t b = 0; b < B; ++b) {
      SeededRng r = step_rng.split(b);
      Tensor patch = stream.draw(r);
      const double u = r.uniform();
      const auto [lo, hi] = c.alpha_stage2_range;
      CorruptedSample s;
      if (supervised) {
        Tensor y = patch + sample_noise(c.noise, patch, r);
        s = assemble_sample(y, Tensor(patch.shape()), 1.0);
        s.target = patch;
      } else {
        const double alpha = (stage2 || deblur) ? lo + (hi - lo) * u : c.alpha_stage1;
        s = make_sample_from_observation(patch, c.noise, alpha, r);
        if (gamma > 0.0)
          prep.pairs[b] =
              build_perturbation(s.y_hat, auxiliary_variance(c.noise, s.y), sigma_max(c.noise, s.y), r);
        if (gamma_prox > 0.0) prep.n_prox[b] = sample_auxiliary(c.noise, s.y, r);
      }
      prep.samples[b] = std::move(s);
    }
    const SampleBatch batch = stack_samples(prep.samples);

    ad::Tape tape;
    BoundModel bm(tape, model);
    ad::Var loss;
    if (deblur) {
      loss = deblur_loss(bm, *blur, batch, prep.pairs, gamma);
      if (gamma_prox > 0.0) {
        SeededRng kr = step_rng.split(B);
        const DeblurOperator prox(random_motion_kernel(c.prox_kernel_size, c.prox_kernel_steps, kr));
        loss = loss + gamma_prox * proxy_loss(bm, batch.y, prox, stack(prep.n_prox));
      }
    } else {
      loss = total_denoise_loss(bm, batch, prep.pairs, gamma);
    }
    const double value = loss.value()[0];
    auto abort = [&](const std::string& why) {
      if (!opt.checkpoint_dir.empty()) save_checkpoint(opt.checkpoint_dir / "last_good", model);
      throw TrainingAborted("training aborted at step " + std::to_string(step) + ": " + why, model, step);
    };
    if (!std::isfinite(value)) abort("non-finite loss");
    tape.backward(loss);
    adam.lr = c.lr_at(local);
    try {
      adam_step(adam, model.parameters(), bm.gradients());
    } catch (const NumericalError& e) {
      abort(e.what());
    }
    model.step = step + 1;
    loss_acc += value;
    ++loss_n;

    if ((local + 1) % c.log_interval == 0 || local + 1 == c.total_steps()) {
      HistoryRow row;
      row.step = step + 1;
      row.loss = loss_acc / static_cast<double>(loss_n);
      row.psnr = row.ssim = std::numeric_limits<double>::quiet_NaN();
      if (opt.eval && !opt.eval->empty()) {
        const MetricsReport m = evaluate_model(model, *opt.eval);
        row.psnr = m.psnr_db;
        row.ssim = m.ssim;
      }
      result.history.push_back(row);
      loss_acc = 0.0;
      loss_n = 0;
    }
  }
  return result;
}

}  // namespace

TrainResult train_denoiser(const TrainConfig& config, const std::vector<Tensor>& corpus, const TrainOptions& options) {
  if (config.mode == TrainConfig::Mode::deblur) throw ParameterError("train_denoiser: config mode is deblur");
  return run_training(config, corpus, nullptr, options);
}

TrainResult train_deblur(const TrainConfig& config, const std::vector<Tensor>& corpus, const DeblurOperator& blur,
                         const TrainOptions& options) {
  if (config.mode != TrainConfig::Mode::deblur) throw ParameterError("train_deblur: config mode must be deblur");
  if (blur.kernel().empty()) throw ParameterError("train_deblur: empty blur operator");
  return run_training(config, corpus, &blur, options);
}

}  // namespace pld
