// Copyright (c) 2026 The PLD Authors
// SPDX-License-Identifier: Apache-2.0

#include "pld/config.hpp"

#include <glob.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pld/io.hpp"

namespace pld {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ParameterError(where + ": expected an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ParameterError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParameterError(where + "." + key + ": " + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

NoiseSpec parse_noise_json(const json& j, const std::filesystem::path& base) {
  reject_unknown(j, {"kind", "sigma", "lambda", "variance", "aux_variance_scale"}, "noise");
  std::string kind = "gaussian";
  read(j, "kind", kind, "noise");
  NoiseSpec spec;
  if (kind == "gaussian") {
    double sigma = 0.0;
    read(j, "sigma", sigma, "noise");
    spec = NoiseSpec::gaussian(sigma);
  } else if (kind == "poisson") {
    double lambda = 1.0;
    read(j, "lambda", lambda, "noise");
    spec = NoiseSpec::poisson(lambda);
  } else if (kind == "var_map") {
    std::string path;
    read(j, "variance", path, "noise");
    if (path.empty()) throw ParameterError("noise.variance: path required for var_map");
    spec = NoiseSpec::variance_map(read_tensor(resolve(base, path)));
  } else {
    throw ParameterError("noise.kind: unknown kind '" + kind + "'");
  }
  double aux = 1.0;
  read(j, "aux_variance_scale", aux, "noise");
  return spec.with_aux_scale(aux);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  reject_unknown(j,
                 {"mode", "seed", "stage1_steps", "stage2_steps", "lr_schedule", "batch_size", "patch_size",
                  "alpha_stage1", "alpha_stage2_range", "gamma", "gamma_prox", "log_interval", "prox_kernel", "noise",
                  "model", "paths"},
                 "config");
  RunConfig rc;
  TrainConfig& t = rc.train;
  const std::string w = "config";
  std::string mode = mode_name(t.mode);
  read(j, "mode", mode, w);
  t.mode = parse_mode(mode);
  if (t.mode == TrainConfig::Mode::deblur) t = TrainConfig::deblur_defaults();
  read(j, "seed", t.seed, w);
  read(j, "stage1_steps", t.stage1_steps, w);
  read(j, "stage2_steps", t.stage2_steps, w);
  read(j, "lr_schedule", t.lr_schedule, w);
  read(j, "batch_size", t.batch_size, w);
  if (j.contains("patch_size")) {
    std::vector<std::size_t> ps;
    read(j, "patch_size", ps, w);
    if (ps.size() != 2) throw ParameterError("config.patch_size: expected [height, width]");
    t.patch_height = ps[0];
    t.patch_width = ps[1];
  }
  read(j, "alpha_stage1", t.alpha_stage1, w);
  read(j, "alpha_stage2_range", t.alpha_stage2_range, w);
  read(j, "gamma", t.gamma, w);
  read(j, "gamma_prox", t.gamma_prox, w);
  read(j, "log_interval", t.log_interval, w);
  if (j.contains("prox_kernel")) {
    const json& pk = j["prox_kernel"];
    reject_unknown(pk, {"size", "steps"}, "prox_kernel");
    read(pk, "size", t.prox_kernel_size, "prox_kernel");
    read(pk, "steps", t.prox_kernel_steps, "prox_kernel");
  }
  if (j.contains("noise")) t.noise = parse_noise_json(j["noise"], base_dir);
  if (j.contains("model")) {
    const json& m = j["model"];
    reject_unknown(m, {"depth", "width", "kernel", "channels", "residual", "rectifier"}, "model");
    read(m, "depth", t.model.depth, "model");
    read(m, "width", t.model.width, "model");
    read(m, "kernel", t.model.kernel, "model");
    read(m, "channels", t.model.channels, "model");
    read(m, "residual", t.model.residual, "model");
    read(m, "rectifier", t.model.rectifier, "model");
  }
  if (j.contains("paths")) {
    const json& p = j["paths"];
    reject_unknown(p, {"corpus", "eval_inputs", "eval_clean", "output", "init", "kernel"}, "paths");
    std::string corpus, ei, ec, out, init, kernel;
    read(p, "corpus", corpus, "paths");
    read(p, "eval_inputs", ei, "paths");
    read(p, "eval_clean", ec, "paths");
    read(p, "output", out, "paths");
    read(p, "init", init, "paths");
    read(p, "kernel", kernel, "paths");
    rc.corpus = corpus.empty() ? "" : resolve(base_dir, corpus).string();
    rc.eval_inputs = ei.empty() ? "" : resolve(base_dir, ei).string();
    rc.eval_clean = ec.empty() ? "" : resolve(base_dir, ec).string();
    rc.output = resolve(base_dir, out);
    rc.init = resolve(base_dir, init);
    rc.kernel = resolve(base_dir, kernel);
  }
  if (rc.eval_inputs.empty() != rc.eval_clean.empty())
    throw ParameterError("paths: eval_inputs and eval_clean must be given together");
  t.validate();
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ParameterError("cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

std::string run_config_json(const RunConfig& rc) {
  const TrainConfig& t = rc.train;
  json noise;
  switch (t.noise.kind) {
    case NoiseSpec::Kind::gaussian: noise = {{"kind", "gaussian"}, {"sigma", t.noise.sigma}}; break;
    case NoiseSpec::Kind::poisson: noise = {{"kind", "poisson"}, {"lambda", t.noise.lambda}}; break;
    case NoiseSpec::Kind::var_map: noise = {{"kind", "var_map"}, {"variance", "<in-memory>"}}; break;
  }
  noise["aux_variance_scale"] = t.noise.aux_variance_scale;
  json j = {
      {"mode", mode_name(t.mode)},
      {"seed", t.seed},
      {"stage1_steps", t.stage1_steps},
      {"stage2_steps", t.stage2_steps},
      {"lr_schedule", t.resolved_schedule()},
      {"batch_size", t.batch_size},
      {"patch_size", {t.patch_height, t.patch_width}},
      {"alpha_stage1", t.alpha_stage1},
      {"alpha_stage2_range", t.alpha_stage2_range},
      {"gamma", t.gamma},
      {"gamma_prox", t.gamma_prox},
      {"log_interval", t.log_interval},
      {"prox_kernel", {{"size", t.prox_kernel_size}, {"steps", t.prox_kernel_steps}}},
      {"noise", noise},
      {"model",
       {{"depth", t.model.depth},
        {"width", t.model.width},
        {"kernel", t.model.kernel},
        {"channels", t.model.channels},
        {"residual", t.model.residual},
        {"rectifier", t.model.rectifier}}},
      {"paths",
       {{"corpus", rc.corpus},
        {"eval_inputs", rc.eval_inputs},
        {"eval_clean", rc.eval_clean},
        {"output", rc.output.string()},
        {"init", rc.init.string()},
        {"kernel", rc.kernel.string()}}},
  };
  return j.dump(2);
}

NoiseSpec parse_noise_spec(const std::string& text) {
  std::string body = text;
  double aux = 1.0;
  if (auto comma = body.find(','); comma != std::string::npos) {
    const std::string tail = body.substr(comma + 1);
    body = body.substr(0, comma);
    if (tail.rfind("aux=", 0) != 0) throw ParameterError("noise spec: unknown suffix '" + tail + "'");
    try {
      aux = std::stod(tail.substr(4));
    } catch (const std::exception&) {
      throw ParameterError("noise spec: bad aux scale in '" + text + "'");
    }
  }
  const auto colon = body.find(':');
  if (colon == std::string::npos) throw ParameterError("noise spec: expected KIND:VALUE, got '" + text + "'");
  const std::string kind = body.substr(0, colon), value = body.substr(colon + 1);
  NoiseSpec spec;
  if (kind == "var") {
    spec = NoiseSpec::variance_map(read_tensor(value));
  } else {
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(value, &used);
      if (used != value.size()) throw ParameterError("");
    } catch (const std::exception&) {
      throw ParameterError("noise spec: bad number in '" + text + "'");
    }
    if (kind == "gaussian") spec = NoiseSpec::gaussian(v);
    else if (kind == "poisson") spec = NoiseSpec::poisson(v);
    else throw ParameterError("noise spec: unknown kind '" + kind + "'");
  }
  spec = spec.with_aux_scale(aux);
  spec.validate();
  return spec;
}

std::vector<std::filesystem::path> expand_inputs(const std::string& pattern) {
  std::vector<std::filesystem::path> out;
  if (std::filesystem::is_directory(pattern)) {
    for (const auto& e : std::filesystem::directory_iterator(pattern)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".pgm" || ext == ".pldt")) out.push_back(e.path());
    }
  } else {
    glob_t g{};
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0)
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    globfree(&g);
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw ParameterError("no input files match '" + pattern + "'");
  return out;
}

std::vector<Tensor> load_images(const std::string& pattern) {
  std::vector<Tensor> images;
  for (const auto& p : expand_inputs(pattern)) images.push_back(read_image_any(p));
  return images;
}

}  // namespace pld
