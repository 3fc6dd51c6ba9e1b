// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pld/autodiff.hpp"
#include "pld/rng.hpp"
#include "pld/tensor.hpp"

namespace pld {

struct ModelConfig {
  std::size_t depth = 5;
  std::size_t width = 16;
  std::size_t kernel = 3;
  std::size_t channels = 1;
  bool residual = true;
  /// false builds a purely affine network (no rectifiers anywhere).
  bool rectifier = true;

  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Plain convolutional stack: conv -> ReLU repeated, last conv linear. With
/// `residual`, the network predicts the noise and the model returns
/// input - network(input).
class DenoiserModel {
 public:
  DenoiserModel() = default;
  /// All-zero parameters; with `residual` this is the identity map.
  explicit DenoiserModel(ModelConfig config);

  /// He-normal hidden layers, zero biases, zero-initialized last layer.
  static DenoiserModel initialized(const ModelConfig& config, SeededRng& rng);

  const ModelConfig& config() const noexcept { return config_; }
  std::size_t layer_count() const noexcept { return config_.depth; }

  /// Parameter order: w0, b0, w1, b1, ...
  std::vector<Tensor>& parameters() noexcept { return params_; }
  const std::vector<Tensor>& parameters() const noexcept { return params_; }
  std::size_t parameter_count() const;

  Tensor& weight(std::size_t layer) { return params_[2 * layer]; }
  Tensor& bias(std::size_t layer) { return params_[2 * layer + 1]; }
  const Tensor& weight(std::size_t layer) const { return params_[2 * layer]; }
  const Tensor& bias(std::size_t layer) const { return params_[2 * layer + 1]; }

  /// Tape-free inference on a (C,H,W) image or an (N,C,H,W) batch.
  Tensor forward(const Tensor& x) const;
  Tensor operator()(const Tensor& x) const { return forward(x); }

  std::uint64_t step = 0;
  std::uint64_t seed = 0;

 private:
  ModelConfig config_;
  std::vector<Tensor> params_;
};

/// A model whose parameters are leaves on a tape.
class BoundModel {
 public:
  BoundModel(ad::Tape& tape, const DenoiserModel& model);

  /// x: rank-4 batch on the same tape.
  ad::Var forward(ad::Var x) const;
  ad::Tape& tape() const { return *tape_; }
  const std::vector<ad::Var>& parameters() const noexcept { return params_; }
  /// Gradients after tape().backward(); zeros for untouched parameters.
  std::vector<Tensor> gradients() const;

 private:
  ad::Tape* tape_;
  ModelConfig config_;
  std::vector<ad::Var> params_;
};

/// Checkpoint directory: manifest.json plus one PLDT file per parameter.
void save_checkpoint(const std::filesystem::path& dir, const DenoiserModel& model);
DenoiserModel load_checkpoint(const std::filesystem::path& dir);

}  // namespace pld
