// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "pld/errors.hpp"
#include "pld/io.hpp"
#include "pld/kernels.hpp"

namespace pld {

namespace {

std::size_t layer_in(const ModelConfig& c, std::size_t layer) { return layer == 0 ? c.channels : c.width; }
std::size_t layer_out(const ModelConfig& c, std::size_t layer) {
  return layer + 1 == c.depth ? c.channels : c.width;
}

Tensor as_batch(const Tensor& x, std::size_t channels) {
  if (x.rank() == 3) return x.reshaped({1, x.extent(0), x.extent(1), x.extent(2)});
  if (x.rank() != 4) throw ParameterError("model input must be (C,H,W) or (N,C,H,W), got " + shape_string(x.shape()));
  if (x.extent(1) != channels)
    throw ParameterError("model expects " + std::to_string(channels) + " channels, got " + shape_string(x.shape()));
  return x;
}

}  // namespace

void ModelConfig::validate() const {
  if (depth < 1) throw ParameterError("model depth must be >= 1");
  if (width < 1 || channels < 1) throw ParameterError("model width and channels must be >= 1");
  if (kernel % 2 == 0) throw ParameterError("model kernel size must be odd");
}

DenoiserModel::DenoiserModel(ModelConfig config) : config_(config) {
  config_.validate();
  for (std::size_t l = 0; l < config_.depth; ++l) {
    params_.emplace_back(Shape{layer_out(config_, l), layer_in(config_, l), config_.kernel, config_.kernel});
    params_.emplace_back(Shape{layer_out(config_, l)});
  }
}

DenoiserModel DenoiserModel::initialized(const ModelConfig& config, SeededRng& rng) {
  DenoiserModel m(config);
  for (std::size_t l = 0; l + 1 < config.depth; ++l) {
    Tensor& w = m.weight(l);
    const double fan_in = static_cast<double>(w.extent(1) * w.extent(2) * w.extent(3));
    const double sd = std::sqrt(2.0 / fan_in);
    for (double& v : w.data()) v = rng.normal(0.0, sd);
  }
  return m;
}

std::size_t DenoiserModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

Tensor DenoiserModel::forward(const Tensor& x) const {
  const Tensor input = as_batch(x, config_.channels);
  Tensor h = input;
  for (std::size_t l = 0; l < config_.depth; ++l) {
    const Tensor& w = weight(l);
    kernels::ConvShape s{h.extent(0), w.extent(1), w.extent(0), h.extent(2), h.extent(3), w.extent(2), w.extent(3)};
    Tensor out({s.batch, s.out_channels, s.height, s.width});
    kernels::conv2d_forward(s, h.data(), w.data(), bias(l).data(), out.data());
    if (config_.rectifier && l + 1 < config_.depth)
      for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
    h = std::move(out);
  }
  Tensor y = config_.residual ? input - h : std::move(h);
  return x.rank() == 3 ? std::move(y).reshaped(x.shape()) : y;
}

BoundModel::BoundModel(ad::Tape& tape, const DenoiserModel& model) : tape_(&tape), config_(model.config()) {
  for (const auto& p : model.parameters()) params_.push_back(tape.leaf(p, true));
}

ad::Var BoundModel::forward(ad::Var x) const {
  ad::Var h = x;
  for (std::size_t l = 0; l < config_.depth; ++l) {
    h = ad::conv2d(h, params_[2 * l], params_[2 * l + 1]);
    if (config_.rectifier && l + 1 < config_.depth) h = ad::relu(h);
  }
  return config_.residual ? x - h : h;
}

std::vector<Tensor> BoundModel::gradients() const {
  std::vector<Tensor> g;
  for (const auto& p : params_) g.push_back(p.grad().empty() ? Tensor(p.value().shape()) : p.grad());
  return g;
}

void save_checkpoint(const std::filesystem::path& dir, const DenoiserModel& model) {
  std::filesystem::create_directories(dir);
  const auto& c = model.config();
  nlohmann::json manifest = {{"format", "pld-checkpoint"},
                             {"version", 1},
                             {"depth", c.depth},
                             {"width", c.width},
                             {"kernel", c.kernel},
                             {"channels", c.channels},
                             {"residual", c.residual},
                             {"rectifier", c.rectifier},
                             {"step", model.step},
                             {"seed", model.seed}};
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < model.parameters().size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "param_%03zu.pldt", i);
    write_tensor(dir / name, model.parameters()[i]);
    files.push_back(name);
  }
  manifest["parameters"] = files;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw FormatError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

DenoiserModel load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw FormatError("checkpoint " + dir.string() + " has no manifest.json");
  nlohmann::json m;
  try {
    in >> m;
    if (m.at("format") != "pld-checkpoint") throw FormatError("not a pld checkpoint: " + dir.string());
    ModelConfig c;
    c.depth = m.at("depth");
    c.width = m.at("width");
    c.kernel = m.at("kernel");
    c.channels = m.at("channels");
    c.residual = m.at("residual");
    c.rectifier = m.at("rectifier");
    DenoiserModel model(c);
    const auto& files = m.at("parameters");
    if (files.size() != model.parameters().size())
      throw FormatError("checkpoint parameter count does not match its architecture");
    for (std::size_t i = 0; i < files.size(); ++i) {
      Tensor t = read_tensor(dir / files[i].get<std::string>());
      if (t.shape() != model.parameters()[i].shape())
        throw FormatError("checkpoint parameter " + std::to_string(i) + " has shape " + shape_string(t.shape()));
      model.parameters()[i] = std::move(t);
    }
    model.step = m.at("step");
    model.seed = m.at("seed");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed checkpoint manifest: " + std::string(e.what()));
  }
}

}  // namespace pld
