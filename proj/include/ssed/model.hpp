#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssed/conv.hpp"
#include "ssed/optimizer.hpp"
#include "ssed/rng.hpp"
#include "ssed/tensor.hpp"

namespace ssed::model {

// How the scene vector reaches the classifier.
enum class Fusion { none, direct, aligned };

std::string fusion_name(Fusion f);
Fusion parse_fusion(const std::string& name);

struct SedNetworkConfig {
  std::size_t n_events = 25;
  std::size_t n_mels = 64;
  std::size_t frames = 500;
  std::vector<std::size_t> cnn_channels{128, 128, 128};
  std::size_t kernel = 3;
  std::vector<std::size_t> freq_pool{8, 2, 2};
  std::size_t gru_units = 32;  // per direction
  std::vector<std::size_t> ffn_units{128, 48};
  Fusion fusion = Fusion::none;
  // Length of the scene vector (one-hot size or E). Unused for Fusion::none.
  std::size_t context_dim = 0;
};

struct AlignmentConfig {
  std::size_t projection_hidden = 256;  // E'
  std::size_t latent = 64;              // L
  std::size_t encoder_channels = 64;    // A
  std::size_t shared = 32;              // S
  std::size_t time_pool = 25;
  std::vector<std::size_t> decoder_channels{128, 128, 128};
  // (time x frequency) kernel of each transposed convolution.
  std::vector<ops::Extent2> decoder_kernels{{3, 3}, {3, 4}, {3, 4}};
};

struct NetworkConfig {
  SedNetworkConfig sed;
  AlignmentConfig align;

  // Throws config_error on inconsistent extents.
  void validate() const;
  std::size_t freq_after_cnn() const;
  std::size_t fusion_dim() const;
};

nlohmann::json to_json(const NetworkConfig& c);
NetworkConfig network_config_from_json(const nlohmann::json& j);

/// Decoder geometry. The seed layer maps z to
/// decoder_channels[0] x seed.h x seed.w; each transposed convolution then
/// grows the map by (in - 1) * stride + kernel per axis, and the result is
/// cropped to frames x n_mels.
struct DecoderPlan {
  ops::Extent2 seed;
  std::vector<ops::Extent2> strides;
  std::vector<ops::Extent2> extents;  // after each transposed convolution
};

// Smallest stride, uniform across layers per axis, that reaches the target.
DecoderPlan plan_decoder(const NetworkConfig& c);

struct ForwardTrace {
  Tensor cnn_out;     // C x T x F'
  Tensor gru_out;     // T x 2H
  Tensor ffn_input;   // T x (2H + fusion dim)
  Tensor logits;      // N x T
  // Aligned mode only.
  Tensor l;           // L
  Tensor z;           // A
  Tensor l_shared;    // S
  Tensor z_shared;    // S
  Tensor x_hat;       // T x F
};

class Network {
 public:
  // Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  Network(NetworkConfig config, std::uint64_t seed);

  const NetworkConfig& config() const { return config_; }
  const DecoderPlan& decoder_plan() const { return plan_; }
  bool aligned() const { return config_.sed.fusion == Fusion::aligned; }

  // Stable order; tensors are shared with the network.
  std::vector<Parameter> parameters() const;
  const Tensor& parameter(const std::string& name) const;
  std::size_t parameter_count() const;

  /// features: frames x n_mels. context: scene vector of context_dim
  /// (direct: fused as is; aligned: the embedding e, projected to l). It is
  /// not read in Fusion::none and may be undefined there.
  ForwardTrace forward(const Tensor& features, const Tensor& context) const;

  Tensor cnn(const Tensor& features) const;
  Tensor project_context(const Tensor& e) const;
  Tensor encode_bottleneck(const Tensor& featmap) const;
  Tensor decode_reconstruction(const Tensor& z) const;
  Tensor to_shared(const Tensor& l) const;
  Tensor to_shared_acoustic(const Tensor& z) const;

 private:
  void add(const std::string& name, Shape shape, std::size_t fan_in, bool bias_like, Rng& rng);
  const Tensor& p(const std::string& name) const { return parameter(name); }
  Tensor bigru(const Tensor& frames) const;

  NetworkConfig config_;
  DecoderPlan plan_;
  std::vector<std::string> order_;
  std::map<std::string, Tensor> params_;
};

// z_hat = 1 iff sigmoid(y) > threshold, evaluated as y > logit(threshold).
std::vector<std::uint8_t> predict_events(std::span<const double> logits, double threshold = 0.5);

/// Directory with manifest.json (format tag, config echo, decoder strides,
/// per-parameter name/shape/dtype/file, caller metadata) and one raw
/// little-endian f64 blob per parameter.
void save_checkpoint(const std::filesystem::path& dir, const Network& net, const nlohmann::json& metadata = {});

struct LoadedCheckpoint {
  Network network;
  nlohmann::json metadata;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace ssed::model
