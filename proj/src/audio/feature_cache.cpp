#include "ssed/feature_cache.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ssed/error.hpp"

namespace ssed::audio {

namespace {

constexpr std::size_t kHeaderBytes = 16;

void put_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_feature_cache(const std::filesystem::path& path, const LogMelSpectrogram& spec) {
  if (spec.values.size() != spec.frames * spec.bands) {
    fail(Errc::shape_mismatch, "spectrogram values do not match frames x bands");
  }
  std::vector<unsigned char> out(kHeaderBytes + 4 * spec.values.size(), 0);
  std::memcpy(out.data(), "LMEL", 4);
  put_u32(out.data() + 4, static_cast<std::uint32_t>(spec.frames));
  put_u32(out.data() + 8, static_cast<std::uint32_t>(spec.bands));
  unsigned char* p = out.data() + kHeaderBytes;
  for (double v : spec.values) {
    put_u32(p, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    p += 4;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) fail(Errc::io_error, "cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) fail(Errc::io_error, "short write to " + path.string());
}

LogMelSpectrogram read_feature_cache(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) fail(Errc::io_error, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), "LMEL", 4) != 0) {
    fail(Errc::feature_cache_malformed, path.string() + ": missing LMEL header");
  }
  LogMelSpectrogram spec;
  spec.frames = get_u32(bytes.data() + 4);
  spec.bands = get_u32(bytes.data() + 8);
  const std::size_t expected = kHeaderBytes + 4 * spec.frames * spec.bands;
  if (spec.frames == 0 || spec.bands == 0 || bytes.size() != expected) {
    fail(Errc::feature_cache_malformed, path.string() + ": header says " +
                                            std::to_string(spec.frames) + "x" +
                                            std::to_string(spec.bands) + " but file has " +
                                            std::to_string(bytes.size()) + " bytes");
  }
  spec.values.resize(spec.frames * spec.bands);
  const unsigned char* p = bytes.data() + kHeaderBytes;
  for (auto& v : spec.values) {
    v = std::bit_cast<float>(get_u32(p));
    p += 4;
  }
  return spec;
}

LogMelSpectrogram quantize_to_cache_precision(LogMelSpectrogram spec) {
  for (auto& v : spec.values) v = static_cast<float>(v);
  return spec;
}

}  // namespace ssed::audio
