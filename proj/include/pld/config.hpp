// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pld/noise.hpp"
#include "pld/trainer.hpp"

namespace pld {

/// A training run: the TrainConfig plus the files it reads and writes.
/// Relative paths resolve against the config file's directory.
struct RunConfig {
  TrainConfig train;
  /// Directory (all .pgm/.pldt files) or glob pattern for training images.
  std::string corpus;
  /// Optional held-out pair for evaluation; both or neither.
  std::string eval_inputs;
  std::string eval_clean;
  /// Output directory: checkpoint/, history.csv, config.json.
  std::filesystem::path output;
  /// Checkpoint to fine-tune from (optional).
  std::filesystem::path init;
  /// Blur kernel (PLDT, rank 2) for deblur mode.
  std::filesystem::path kernel;
};

/// Parses and validates a RunConfig. Unknown keys anywhere raise ParameterError.
RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical JSON form (every field spelled out); parse_run_config accepts it.
std::string run_config_json(const RunConfig& config);

/// "gaussian:SIGMA", "poisson:LAMBDA" or "var:PATH" (per-pixel variance
/// PLDT), optionally followed by ",aux=SCALE".
NoiseSpec parse_noise_spec(const std::string& text);

/// Files matched by a directory (sorted .pgm/.pldt entries) or a glob.
std::vector<std::filesystem::path> expand_inputs(const std::string& pattern);
std::vector<Tensor> load_images(const std::string& pattern);

}  // namespace pld
