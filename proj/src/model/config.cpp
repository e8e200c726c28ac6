#include <numeric>

#include "ssed/error.hpp"
#include "ssed/model.hpp"

namespace ssed::model {

std::string fusion_name(Fusion f) {
  switch (f) {
    case Fusion::none: return "none";
    case Fusion::direct: return "direct";
    case Fusion::aligned: return "aligned";
  }
  return "none";
}

Fusion parse_fusion(const std::string& name) {
  if (name == "none") return Fusion::none;
  if (name == "direct") return Fusion::direct;
  if (name == "aligned") return Fusion::aligned;
  fail(Errc::config_error, "unknown fusion '" + name + "' (expected none, direct or aligned)");
}

std::size_t NetworkConfig::freq_after_cnn() const {
  return sed.n_mels / std::accumulate(sed.freq_pool.begin(), sed.freq_pool.end(), std::size_t{1},
                                      std::multiplies<>());
}

std::size_t NetworkConfig::fusion_dim() const {
  switch (sed.fusion) {
    case Fusion::none: return 0;
    case Fusion::direct: return sed.context_dim;
    case Fusion::aligned: return align.latent;
  }
  return 0;
}

void NetworkConfig::validate() const {
  auto bad = [](const std::string& msg) { fail(Errc::config_error, "model config: " + msg); };
  if (sed.n_events == 0 || sed.n_mels == 0 || sed.frames == 0) bad("n_events, n_mels and frames must be >= 1");
  if (sed.cnn_channels.empty() || sed.cnn_channels.size() != sed.freq_pool.size()) {
    bad("cnn_channels and freq_pool need the same non-zero length");
  }
  for (auto c : sed.cnn_channels)
    if (c == 0) bad("cnn channel counts must be >= 1");
  if (sed.kernel % 2 == 0) bad("cnn kernel must be odd for same padding");
  std::size_t prod = 1;
  for (auto p : sed.freq_pool) {
    if (p == 0) bad("freq_pool entries must be >= 1");
    prod *= p;
  }
  if (sed.n_mels % prod != 0) {
    bad("n_mels " + std::to_string(sed.n_mels) + " is not divisible by the freq_pool product " +
        std::to_string(prod));
  }
  if (sed.gru_units == 0 || sed.ffn_units.empty()) bad("gru_units and ffn_units must be non-empty");
  for (auto u : sed.ffn_units)
    if (u == 0) bad("ffn_units entries must be >= 1");
  if (sed.fusion != Fusion::none && sed.context_dim == 0) bad("context_dim must be >= 1 when fusing a scene vector");
  if (sed.fusion == Fusion::aligned) {
    const auto& a = align;
    if (!a.projection_hidden || !a.latent || !a.encoder_channels || !a.shared || !a.time_pool) {
      bad("alignment dimensions must be >= 1");
    }
    if (sed.frames < a.time_pool) {
      bad("frames " + std::to_string(sed.frames) + " shorter than the encoder time pool " +
          std::to_string(a.time_pool));
    }
    if (a.decoder_channels.empty() || a.decoder_channels.size() != a.decoder_kernels.size()) {
      bad("decoder_channels and decoder_kernels need the same non-zero length");
    }
    for (std::size_t i = 0; i < a.decoder_channels.size(); ++i) {
      if (!a.decoder_channels[i] || !a.decoder_kernels[i].h || !a.decoder_kernels[i].w) {
        bad("decoder channels and kernels must be >= 1");
      }
    }
  }
}

DecoderPlan plan_decoder(const NetworkConfig& c) {
  DecoderPlan plan;
  plan.seed = {c.sed.frames / c.align.time_pool, c.freq_after_cnn()};
  const auto& kernels = c.align.decoder_kernels;
  auto grow = [&](std::size_t start, std::size_t stride, bool time_axis) {
    std::vector<std::size_t> out;
    std::size_t e = start;
    for (const auto& k : kernels) {
      e = (e - 1) * stride + (time_axis ? k.h : k.w);
      out.push_back(e);
    }
    return out;
  };
  auto smallest_stride = [&](std::size_t start, std::size_t target, bool time_axis) {
    for (std::size_t s = 1;; ++s) {
      if (grow(start, s, time_axis).back() >= target) return s;
    }
  };
  const std::size_t st = smallest_stride(plan.seed.h, c.sed.frames, true);
  const std::size_t sf = smallest_stride(plan.seed.w, c.sed.n_mels, false);
  auto th = grow(plan.seed.h, st, true);
  auto tw = grow(plan.seed.w, sf, false);
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    plan.strides.push_back({st, sf});
    plan.extents.push_back({th[i], tw[i]});
  }
  return plan;
}

namespace {

nlohmann::json extents_json(const std::vector<ops::Extent2>& v) {
  auto out = nlohmann::json::array();
  for (const auto& e : v) out.push_back({e.h, e.w});
  return out;
}

std::vector<ops::Extent2> extents_from(const nlohmann::json& j) {
  std::vector<ops::Extent2> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2) fail(Errc::config_error, "kernel extents must be [time, freq] pairs");
    out.push_back({e[0].get<std::size_t>(), e[1].get<std::size_t>()});
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const NetworkConfig& c) {
  return {
      {"n_events", c.sed.n_events},
      {"n_mels", c.sed.n_mels},
      {"frames", c.sed.frames},
      {"cnn_channels", c.sed.cnn_channels},
      {"kernel", c.sed.kernel},
      {"freq_pool", c.sed.freq_pool},
      {"gru_units", c.sed.gru_units},
      {"ffn_units", c.sed.ffn_units},
      {"fusion", fusion_name(c.sed.fusion)},
      {"context_dim", c.sed.context_dim},
      {"projection_hidden", c.align.projection_hidden},
      {"latent", c.align.latent},
      {"encoder_channels", c.align.encoder_channels},
      {"shared", c.align.shared},
      {"time_pool", c.align.time_pool},
      {"decoder_channels", c.align.decoder_channels},
      {"decoder_kernels", extents_json(c.align.decoder_kernels)},
  };
}

NetworkConfig network_config_from_json(const nlohmann::json& j) {
  NetworkConfig c;
  if (!j.is_object()) fail(Errc::config_error, "model config must be a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n_events") c.sed.n_events = value.get<std::size_t>();
      else if (key == "n_mels") c.sed.n_mels = value.get<std::size_t>();
      else if (key == "frames") c.sed.frames = value.get<std::size_t>();
      else if (key == "cnn_channels") c.sed.cnn_channels = value.get<std::vector<std::size_t>>();
      else if (key == "kernel") c.sed.kernel = value.get<std::size_t>();
      else if (key == "freq_pool") c.sed.freq_pool = value.get<std::vector<std::size_t>>();
      else if (key == "gru_units") c.sed.gru_units = value.get<std::size_t>();
      else if (key == "ffn_units") c.sed.ffn_units = value.get<std::vector<std::size_t>>();
      else if (key == "fusion") c.sed.fusion = parse_fusion(value.get<std::string>());
      else if (key == "context_dim") c.sed.context_dim = value.get<std::size_t>();
      else if (key == "projection_hidden") c.align.projection_hidden = value.get<std::size_t>();
      else if (key == "latent") c.align.latent = value.get<std::size_t>();
      else if (key == "encoder_channels") c.align.encoder_channels = value.get<std::size_t>();
      else if (key == "shared") c.align.shared = value.get<std::size_t>();
      else if (key == "time_pool") c.align.time_pool = value.get<std::size_t>();
      else if (key == "decoder_channels") c.align.decoder_channels = value.get<std::vector<std::size_t>>();
      else if (key == "decoder_kernels") c.align.decoder_kernels = extents_from(value);
      else fail(Errc::config_error, "unknown model config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config_error, std::string("model config: ") + e.what());
  }
  return c;
}

}  // namespace ssed::model
