#include <cmath>

#include "ssed/error.hpp"
#include "ssed/gru.hpp"
#include "ssed/model.hpp"
#include "ssed/ops.hpp"

namespace ssed::model {

namespace {

std::string idx(const std::string& base, std::size_t i) { return base + std::to_string(i + 1); }

}  // namespace

Network::Network(NetworkConfig config, std::uint64_t seed) : config_(std::move(config)) {
  config_.validate();
  const auto& s = config_.sed;
  const auto& a = config_.align;
  Rng rng(seed);

  std::size_t in_ch = 1;
  for (std::size_t i = 0; i < s.cnn_channels.size(); ++i) {
    const std::size_t fan = in_ch * s.kernel * s.kernel;
    add(idx("sed.conv", i) + ".weight", {s.cnn_channels[i], in_ch, s.kernel, s.kernel}, fan, false, rng);
    add(idx("sed.conv", i) + ".bias", {s.cnn_channels[i]}, fan, true, rng);
    in_ch = s.cnn_channels[i];
  }
  const std::size_t gru_in = in_ch * config_.freq_after_cnn();
  const std::size_t H = s.gru_units;
  for (const char* dir : {"fwd", "bwd"}) {
    const std::string base = std::string("sed.gru.") + dir;
    add(base + ".input_weight", {3 * H, gru_in}, gru_in, false, rng);
    add(base + ".hidden_weight", {3 * H, H}, H, false, rng);
    add(base + ".bias", {3 * H}, H, true, rng);
  }
  std::size_t width = 2 * H + config_.fusion_dim();
  for (std::size_t i = 0; i < s.ffn_units.size(); ++i) {
    add(idx("sed.ffn", i) + ".weight", {s.ffn_units[i], width}, width, false, rng);
    add(idx("sed.ffn", i) + ".bias", {s.ffn_units[i]}, width, true, rng);
    width = s.ffn_units[i];
  }
  add("sed.out.weight", {s.n_events, width}, width, false, rng);
  add("sed.out.bias", {s.n_events}, width, true, rng);

  if (!aligned()) return;
  plan_ = plan_decoder(config_);

  add("ctx.proj1.weight", {a.projection_hidden, s.context_dim}, s.context_dim, false, rng);
  add("ctx.proj1.bias", {a.projection_hidden}, s.context_dim, true, rng);
  add("ctx.proj2.weight", {a.latent, a.projection_hidden}, a.projection_hidden, false, rng);
  add("ctx.proj2.bias", {a.latent}, a.projection_hidden, true, rng);

  const std::size_t enc_fan = in_ch * 9;
  add("ae.enc.weight", {a.encoder_channels, in_ch, 3, 3}, enc_fan, false, rng);
  add("ae.enc.bias", {a.encoder_channels}, enc_fan, true, rng);
  const std::size_t seed_out = a.decoder_channels[0] * plan_.seed.h * plan_.seed.w;
  add("ae.seed.weight", {seed_out, a.encoder_channels}, a.encoder_channels, false, rng);
  add("ae.seed.bias", {seed_out}, a.encoder_channels, true, rng);
  std::size_t ch = a.decoder_channels[0];
  for (std::size_t i = 0; i < a.decoder_channels.size(); ++i) {
    const auto k = a.decoder_kernels[i];
    const std::size_t fan = ch * k.h * k.w;
    add(idx("ae.deconv", i) + ".weight", {ch, a.decoder_channels[i], k.h, k.w}, fan, false, rng);
    add(idx("ae.deconv", i) + ".bias", {a.decoder_channels[i]}, fan, true, rng);
    ch = a.decoder_channels[i];
  }
  add("ae.out.weight", {1, ch, 1, 1}, ch, false, rng);
  add("ae.out.bias", {1}, ch, true, rng);

  add("head.semantic.weight", {a.shared, a.latent}, a.latent, false, rng);
  add("head.semantic.bias", {a.shared}, a.latent, true, rng);
  add("head.acoustic.weight", {a.shared, a.encoder_channels}, a.encoder_channels, false, rng);
  add("head.acoustic.bias", {a.shared}, a.encoder_channels, true, rng);
}

void Network::add(const std::string& name, Shape shape, std::size_t fan_in, bool bias_like, Rng& rng) {
  std::vector<double> data(shape_numel(shape), 0.0);
  if (!bias_like) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& v : data) v = rng.uniform(-bound, bound);
  }
  order_.push_back(name);
  params_.emplace(name, Tensor::from_data(std::move(shape), std::move(data), true));
}

std::vector<Parameter> Network::parameters() const {
  std::vector<Parameter> out;
  for (const auto& n : order_) out.push_back({n, params_.at(n)});
  return out;
}

const Tensor& Network::parameter(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) fail(Errc::invalid_argument, "network has no parameter '" + name + "'");
  return it->second;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [k, t] : params_) n += t.numel();
  return n;
}

Tensor Network::cnn(const Tensor& features) const {
  const auto& s = config_.sed;
  if (features.shape() != Shape{s.frames, s.n_mels}) {
    fail(Errc::shape_mismatch, "features " + shape_str(features.shape()) + ", network expects " +
                                   shape_str({s.frames, s.n_mels}));
  }
  Tensor x = ops::reshape(features, {1, s.frames, s.n_mels});
  for (std::size_t i = 0; i < s.cnn_channels.size(); ++i) {
    const auto base = idx("sed.conv", i);
    x = ops::swish(ops::conv2d(x, p(base + ".weight"), p(base + ".bias"), ops::same_padding(s.kernel, s.kernel)));
    x = ops::max_pool2d(x, {1, s.freq_pool[i]});
  }
  return x;
}

Tensor Network::bigru(const Tensor& frames) const {
  const std::size_t T = frames.dim(0);
  const std::size_t H = config_.sed.gru_units;
  auto run = [&](const std::string& dir, bool reverse) {
    const ops::GruParams gp{p("sed.gru." + dir + ".input_weight"), p("sed.gru." + dir + ".hidden_weight"),
                            p("sed.gru." + dir + ".bias")};
    std::vector<Tensor> out(T);
    Tensor h = Tensor::zeros({H});
    for (std::size_t i = 0; i < T; ++i) {
      const std::size_t t = reverse ? T - 1 - i : i;
      h = ops::gru_step(h, ops::row(frames, t), gp);
      out[t] = h;
    }
    return ops::stack_rows(out);
  };
  return ops::concat(run("fwd", false), run("bwd", true));
}

Tensor Network::project_context(const Tensor& e) const {
  if (!aligned()) fail(Errc::invalid_argument, "project_context needs an aligned-mode network");
  if (e.shape() != Shape{config_.sed.context_dim}) {
    fail(Errc::shape_mismatch, "scene embedding " + shape_str(e.shape()) + ", expected [" +
                                   std::to_string(config_.sed.context_dim) + "]");
  }
  auto h = ops::swish(ops::linear(e, p("ctx.proj1.weight"), p("ctx.proj1.bias")));
  return ops::linear(h, p("ctx.proj2.weight"), p("ctx.proj2.bias"));
}

Tensor Network::encode_bottleneck(const Tensor& featmap) const {
  if (!aligned()) fail(Errc::invalid_argument, "encode_bottleneck needs an aligned-mode network");
  auto x = ops::swish(ops::conv2d(featmap, p("ae.enc.weight"), p("ae.enc.bias"), ops::same_padding(3, 3)));
  x = ops::max_pool2d(x, {config_.align.time_pool, 1});
  return ops::channel_mean(x);
}

Tensor Network::decode_reconstruction(const Tensor& z) const {
  if (!aligned()) fail(Errc::invalid_argument, "decode_reconstruction needs an aligned-mode network");
  const auto& a = config_.align;
  if (z.shape() != Shape{a.encoder_channels}) {
    fail(Errc::shape_mismatch, "bottleneck " + shape_str(z.shape()) + ", expected [" +
                                   std::to_string(a.encoder_channels) + "]");
  }
  auto x = ops::swish(ops::linear(z, p("ae.seed.weight"), p("ae.seed.bias")));
  x = ops::reshape(x, {a.decoder_channels[0], plan_.seed.h, plan_.seed.w});
  for (std::size_t i = 0; i < a.decoder_channels.size(); ++i) {
    const auto base = idx("ae.deconv", i);
    x = ops::swish(ops::transposed_conv2d(x, p(base + ".weight"), p(base + ".bias"), plan_.strides[i]));
  }
  x = ops::conv2d(x, p("ae.out.weight"), p("ae.out.bias"));
  const auto& s = config_.sed;
  x = ops::narrow(ops::narrow(x, 1, 0, s.frames), 2, 0, s.n_mels);
  return ops::reshape(x, {s.frames, s.n_mels});
}

Tensor Network::to_shared(const Tensor& l) const {
  if (!aligned()) fail(Errc::invalid_argument, "to_shared needs an aligned-mode network");
  return ops::linear(l, p("head.semantic.weight"), p("head.semantic.bias"));
}

Tensor Network::to_shared_acoustic(const Tensor& z) const {
  if (!aligned()) fail(Errc::invalid_argument, "to_shared_acoustic needs an aligned-mode network");
  return ops::linear(z, p("head.acoustic.weight"), p("head.acoustic.bias"));
}

ForwardTrace Network::forward(const Tensor& features, const Tensor& context) const {
  const auto& s = config_.sed;
  ForwardTrace tr;
  tr.cnn_out = cnn(features);
  const std::size_t T = s.frames;
  auto per_frame = ops::reshape(ops::permute(tr.cnn_out, {1, 0, 2}), {T, tr.cnn_out.dim(0) * tr.cnn_out.dim(2)});
  tr.gru_out = bigru(per_frame);

  Tensor fused;
  if (s.fusion != Fusion::none) {
    if (!context.defined() || context.shape() != Shape{s.context_dim}) {
      fail(Errc::shape_mismatch, "scene vector " + (context.defined() ? shape_str(context.shape()) : "missing") +
                                     ", " + fusion_name(s.fusion) + " fusion expects [" +
                                     std::to_string(s.context_dim) + "]");
    }
    if (s.fusion == Fusion::direct) {
      fused = context;
    } else {
      tr.l = project_context(context);
      fused = tr.l;
    }
  }
  tr.ffn_input = fused.defined() ? ops::concat(tr.gru_out, ops::broadcast_rows(fused, T)) : tr.gru_out;

  Tensor h = tr.ffn_input;
  for (std::size_t i = 0; i < s.ffn_units.size(); ++i) {
    const auto base = idx("sed.ffn", i);
    h = ops::swish(ops::linear(h, p(base + ".weight"), p(base + ".bias")));
  }
  tr.logits = ops::transpose(ops::linear(h, p("sed.out.weight"), p("sed.out.bias")));

  if (aligned()) {
    tr.z = encode_bottleneck(tr.cnn_out);
    tr.x_hat = decode_reconstruction(tr.z);
    tr.l_shared = to_shared(tr.l);
    tr.z_shared = to_shared_acoustic(tr.z);
  }
  return tr;
}

std::vector<std::uint8_t> predict_events(std::span<const double> logits, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) fail(Errc::invalid_argument, "threshold must lie in (0, 1)");
  // logit(0.5) evaluates to exactly 0.
  const double cut = std::log(threshold / (1.0 - threshold));
  std::vector<std::uint8_t> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] > cut ? 1 : 0;
  return out;
}

}  // namespace ssed::model
