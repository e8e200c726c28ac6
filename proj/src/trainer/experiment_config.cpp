#include <cmath>
#include <fstream>
#include <sstream>

#include "ssed/error.hpp"
#include "ssed/trainer.hpp"

#ifndef SSED_CODE_VERSION
#define SSED_CODE_VERSION "unknown"
#endif

namespace ssed::trainer {

std::string code_version() { return SSED_CODE_VERSION; }

std::string Representation::str() const {
  switch (mode) {
    case scene::SceneMode::none: return "none";
    case scene::SceneMode::onehot: return "onehot";
    case scene::SceneMode::embedding: return "table:" + table.string();
  }
  return "none";
}

Representation parse_representation(const std::string& text) {
  if (text == "none") return {};
  if (text == "onehot") return {scene::SceneMode::onehot, {}};
  if (text.rfind("table:", 0) == 0 && text.size() > 6) return {scene::SceneMode::embedding, text.substr(6)};
  fail(Errc::config_error, "unknown representation '" + text + "' (expected none, onehot or table:<path>)");
}

model::NetworkConfig desk_network_config() {
  model::NetworkConfig c;
  c.sed.frames = 100;
  c.sed.cnn_channels = {16, 16, 16};
  c.sed.gru_units = 16;
  c.sed.ffn_units = {32, 16};
  c.align.projection_hidden = 32;
  c.align.latent = 16;
  c.align.encoder_channels = 16;
  c.align.shared = 8;
  c.align.decoder_channels = {16, 16, 16};
  return c;
}

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& m) { fail(Errc::config_error, m); };
  if (corpus.empty()) bad("config needs a corpus directory");
  if (fusion == model::Fusion::none && representation.mode != scene::SceneMode::none)
    bad("representation " + representation.str() + " is unused without fusion (set fusion to direct or aligned)");
  if (fusion != model::Fusion::none && representation.mode == scene::SceneMode::none)
    bad(model::fusion_name(fusion) + " fusion requires a scene representation");
  if (!(weights.alpha >= 0.0) || !(weights.beta >= 0.0) || !std::isfinite(weights.alpha) ||
      !std::isfinite(weights.beta))
    bad("alpha and beta must be finite and >= 0");
  if (!(lr >= 0.0) || !std::isfinite(lr)) bad("lr must be finite and >= 0");
  if (batch_size == 0) bad("batch_size must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) bad("threshold must lie in (0, 1)");
  if (!(clip_seconds > 0.0)) bad("clip_seconds must be > 0");
  if (jobs == 0) bad("jobs must be >= 1");
  if (output_dir.empty()) bad("output_dir must not be empty");
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

model::NetworkConfig model_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "full") return {};
    if (name == "desk") return desk_network_config();
    fail(Errc::config_error, "unknown model preset '" + name + "' (expected full or desk)");
  }
  if (!j.is_object()) fail(Errc::config_error, "model must be a preset name or an object");
  auto merged = to_json(j.contains("preset") ? model_from_json(j.at("preset")) : model::NetworkConfig{});
  for (const auto& [key, value] : j.items()) {
    if (key == "preset") continue;
    if (!merged.contains(key)) fail(Errc::config_error, "unknown model config key '" + key + "'");
    merged[key] = value;
  }
  return model::network_config_from_json(merged);
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) fail(Errc::config_error, "experiment config must be a JSON object");
  ExperimentConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "corpus") c.corpus = resolve(base_dir, v.get<std::string>());
      else if (key == "representation") c.representation = parse_representation(v.get<std::string>());
      else if (key == "fusion") c.fusion = model::parse_fusion(v.get<std::string>());
      else if (key == "alpha") c.weights.alpha = v.get<double>();
      else if (key == "beta") c.weights.beta = v.get<double>();
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "threshold") c.threshold = v.get<double>();
      else if (key == "output_dir") c.output_dir = resolve(base_dir, v.get<std::string>());
      else if (key == "model") c.model = model_from_json(v);
      else if (key == "clip_seconds") c.clip_seconds = v.get<double>();
      else if (key == "split") {
        const auto s = v.get<std::string>();
        if (s == "hash") c.split = Split::hash;
        else if (s == "all") c.split = Split::all;
        else fail(Errc::config_error, "unknown split '" + s + "' (expected hash or all)");
      }
      else if (key == "validation") c.validation = v.get<bool>();
      else if (key == "mask_padding") c.mask_padding = v.get<bool>();
      else if (key == "normalize_features") c.normalize_features = v.get<bool>();
      else if (key == "jobs") c.jobs = v.get<std::size_t>();
      else if (key == "variants") continue;  // read by variants_from_json
      else fail(Errc::config_error, "unknown experiment config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config_error, std::string("experiment config: ") + e.what());
  }
  if (c.representation.mode == scene::SceneMode::embedding)
    c.representation.table = resolve(base_dir, c.representation.table);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config_error, path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j, path.parent_path());
}

nlohmann::json to_json(const ExperimentConfig& c) {
  return {
      {"corpus", c.corpus.string()},
      {"representation", c.representation.str()},
      {"fusion", model::fusion_name(c.fusion)},
      {"alpha", c.weights.alpha},
      {"beta", c.weights.beta},
      {"lr", c.lr},
      {"batch_size", c.batch_size},
      {"epochs", c.epochs},
      {"seed", c.seed},
      {"threshold", c.threshold},
      {"output_dir", c.output_dir.string()},
      {"model", model::to_json(c.model)},
      {"clip_seconds", c.clip_seconds},
      {"split", c.split == Split::hash ? "hash" : "all"},
      {"validation", c.validation},
      {"mask_padding", c.mask_padding},
      {"normalize_features", c.normalize_features},
      {"jobs", c.jobs},
  };
}

std::vector<Variant> variants_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_array() || j.empty()) fail(Errc::config_error, "variants must be a non-empty array");
  std::vector<Variant> out;
  try {
    for (const auto& item : j) {
      Variant v;
      for (const auto& [key, value] : item.items()) {
        if (key == "name") v.name = value.get<std::string>();
        else if (key == "representation") v.representation = parse_representation(value.get<std::string>());
        else if (key == "fusion") v.fusion = model::parse_fusion(value.get<std::string>());
        else fail(Errc::config_error, "unknown variant key '" + key + "'");
      }
      if (v.representation.mode == scene::SceneMode::embedding)
        v.representation.table = resolve(base_dir, v.representation.table);
      if (v.name.empty()) v.name = v.representation.str() + "+" + model::fusion_name(v.fusion);
      for (char& ch : v.name)
        if (ch == '/' || ch == ':' || ch == ' ') ch = '_';
      for (const auto& prev : out)
        if (prev.name == v.name) fail(Errc::config_error, "duplicate variant name '" + v.name + "'");
      out.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config_error, std::string("variants: ") + e.what());
  }
  return out;
}

}  // namespace ssed::trainer
