// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "pld/errors.hpp"
#include "pld/losses.hpp"
#include "pld/metrics.hpp"
#include "pld/model.hpp"
#include "pld/noise.hpp"
#include "pld/rng.hpp"

namespace pld {

/// Random crops with independent horizontal/vertical flips (probability 1/2
/// each). Images smaller than the patch are dropped with a warning on stderr.
class PatchStream {
 public:
  PatchStream(const std::vector<Tensor>& corpus, std::size_t patch_height, std::size_t patch_width,
              bool flips = true);

  std::size_t image_count() const noexcept { return images_.size(); }
  /// One augmented patch; every draw comes from `rng`.
  Tensor draw(SeededRng& rng) const;

  static Tensor augment(const Tensor& patch, bool flip_h, bool flip_v);

 private:
  std::vector<const Tensor*> images_;
  std::size_t ph_, pw_;
  bool flips_;
};

struct TrainConfig {
  enum class Mode { denoise, deblur, supervised_baseline };

  std::size_t stage1_steps = 2000;
  std::size_t stage2_steps = 2000;
  /// (first step, lr) pairs; the lr of the last point at or before a step
  /// applies. Empty selects desk_schedule().
  std::vector<std::pair<std::size_t, double>> lr_schedule;
  std::size_t batch_size = 16;
  std::size_t patch_height = 32;
  std::size_t patch_width = 32;
  double alpha_stage1 = 1.0;
  std::pair<double, double> alpha_stage2_range{0.1, 0.5};
  double gamma = 4.0;
  double gamma_prox = 0.0;
  std::uint64_t seed = 1;
  NoiseSpec noise = NoiseSpec::gaussian(25.0 / 255.0);
  Mode mode = Mode::denoise;
  ModelConfig model;
  /// Steps between history rows (and evaluations when held-out data is given).
  std::size_t log_interval = 100;
  /// Random-motion proxy kernels for deblurring.
  std::size_t prox_kernel_size = 5;
  std::size_t prox_kernel_steps = 8;

  std::size_t total_steps() const noexcept { return stage1_steps + stage2_steps; }
  /// lr 1e-3, dropping to 1e-4 at 60% of each stage.
  std::vector<std::pair<std::size_t, double>> desk_schedule() const;
  std::vector<std::pair<std::size_t, double>> resolved_schedule() const;
  double lr_at(std::size_t step) const;
  void validate() const;

  /// Deblurring defaults: alpha in [0.1, 0.2] throughout, gamma = gamma_prox = 1/16,
  /// sigma = 2/255.
  static TrainConfig deblur_defaults();
};

const char* mode_name(TrainConfig::Mode mode);
TrainConfig::Mode parse_mode(const std::string& name);

/// Held-out images: model inputs and the clean references.
struct EvalSet {
  std::vector<Tensor> inputs;
  std::vector<Tensor> clean;

  bool empty() const noexcept { return inputs.empty(); }
};

struct HistoryRow {
  std::size_t step = 0;
  /// Mean training loss since the previous row.
  double loss = 0.0;
  /// NaN when no evaluation ran.
  double psnr = 0.0;
  double ssim = 0.0;
};

struct TrainResult {
  DenoiserModel model;
  std::vector<HistoryRow> history;
};

struct TrainOptions {
  TrainOptions() = default;
  explicit TrainOptions(const EvalSet* eval_set, const DenoiserModel* init_model = nullptr,
                        std::filesystem::path dir = {})
      : eval(eval_set), init(init_model), checkpoint_dir(std::move(dir)) {}

  const EvalSet* eval = nullptr;
  /// Starting point (fine-tuning); a fresh initialization when null.
  const DenoiserModel* init = nullptr;
  /// Receives "last_good" on a numerical abort.
  std::filesystem::path checkpoint_dir;
};

/// Thrown when a loss or gradient goes non-finite. Carries the parameters
/// from before the offending step.
class TrainingAborted : public NumericalError {
 public:
  TrainingAborted(const std::string& what, DenoiserModel last_good, std::size_t step)
      : NumericalError(what), last_good_(std::move(last_good)), step_(step) {}
  const DenoiserModel& last_good() const noexcept { return last_good_; }
  std::size_t step() const noexcept { return step_; }

 private:
  DenoiserModel last_good_;
  std::size_t step_;
};

/// mode denoise: corpus holds noisy observations. Stage 1 trains with
/// alpha = alpha_stage1 and no penalty; stage 2 draws alpha per sample and
/// adds gamma * plc_penalty.
/// mode supervised_baseline: corpus holds clean images; noise is drawn afresh
/// each step and the target is the clean patch.
TrainResult train_denoiser(const TrainConfig& config, const std::vector<Tensor>& corpus,
                           const TrainOptions& options = {});

/// Corpus holds blurred noisy observations. Phase 1 minimizes the blur-aware
/// loss alone; phase 2 (from stage1_steps on) adds gamma * penalty on A∘R and
/// gamma_prox * proxy loss with a fresh motion kernel every step.
TrainResult train_deblur(const TrainConfig& config, const std::vector<Tensor>& corpus, const DeblurOperator& blur,
                         const TrainOptions& options = {});

/// Applies the model to each input and scores against the clean images.
MetricsReport evaluate_model(const DenoiserModel& model, const EvalSet& eval);

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& history);

}  // namespace pld
