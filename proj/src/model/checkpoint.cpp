#include <bit>
#include <fstream>
#include <iterator>

#include "ssed/error.hpp"
#include "ssed/model.hpp"

namespace ssed::model {

namespace {

constexpr const char* kFormat = "ssed-checkpoint";
constexpr int kVersion = 1;

void write_blob(const std::filesystem::path& path, std::span<const double> values) {
  std::vector<unsigned char> bytes(values.size() * 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(values[i]);
    for (int b = 0; b < 8; ++b) bytes[8 * i + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xFF);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(Errc::io_error, "short write to " + path.string());
}

std::vector<double> read_blob(const std::filesystem::path& path, std::size_t count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::checkpoint_error, "missing parameter blob " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != 8 * count) {
    fail(Errc::checkpoint_error, path.string() + ": expected " + std::to_string(8 * count) + " bytes, found " +
                                     std::to_string(bytes.size()));
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[8 * i + b]) << (8 * b);
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const Network& net, const nlohmann::json& metadata) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kVersion;
  manifest["config"] = to_json(net.config());
  if (net.aligned()) {
    const auto& plan = net.decoder_plan();
    manifest["decoder_seed"] = {plan.seed.h, plan.seed.w};
    auto strides = nlohmann::json::array();
    for (const auto& s : plan.strides) strides.push_back({s.h, s.w});
    manifest["decoder_strides"] = strides;
  }
  auto params = nlohmann::json::array();
  for (const auto& p : net.parameters()) {
    const std::string file = p.name + ".f64";
    write_blob(dir / file, p.tensor.data());
    params.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"dtype", "f64"}, {"file", file}});
  }
  manifest["parameters"] = params;
  manifest["metadata"] = metadata.is_null() ? nlohmann::json::object() : metadata;
  std::ofstream out(dir / "manifest.json");
  if (!out) fail(Errc::io_error, "cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) fail(Errc::checkpoint_error, "no checkpoint manifest at " + path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::checkpoint_error, path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != kFormat || manifest.value("version", 0) != kVersion) {
    fail(Errc::checkpoint_error, path.string() + ": not a version " + std::to_string(kVersion) + " checkpoint");
  }
  Network net(network_config_from_json(manifest.at("config")), 0);
  const auto expected = net.parameters();
  const auto& listed = manifest.at("parameters");
  if (listed.size() != expected.size()) {
    fail(Errc::checkpoint_error, path.string() + ": lists " + std::to_string(listed.size()) +
                                     " parameters, config implies " + std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& entry = listed[i];
    const auto& p = expected[i];
    if (entry.at("name") != p.name || entry.at("shape").get<Shape>() != p.tensor.shape() ||
        entry.at("dtype") != "f64") {
      fail(Errc::checkpoint_error, path.string() + ": parameter " + std::to_string(i) + " does not match '" +
                                       p.name + "' " + shape_str(p.tensor.shape()));
    }
    auto values = read_blob(dir / entry.at("file").get<std::string>(), p.tensor.numel());
    Tensor t = p.tensor;
    std::copy(values.begin(), values.end(), t.mutable_data().begin());
  }
  return {std::move(net), manifest.value("metadata", nlohmann::json::object())};
}

}  // namespace ssed::model
