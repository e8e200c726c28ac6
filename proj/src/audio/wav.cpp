#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "ssed/audio.hpp"
#include "ssed/error.hpp"

namespace ssed::audio {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xFF));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string() + ": ";

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(Errc::wav_malformed_header, where + "not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (available < 16) fail(Errc::wav_malformed_header, where + "truncated fmt chunk");
      std::uint16_t format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible) {
        // Sub-format GUID starts with the plain format code.
        if (available < 26) fail(Errc::wav_malformed_header, where + "truncated extensible fmt chunk");
        format = read_u16(chunk + 8 + 24);
      }
      if (format != kFormatPcm) {
        fail(Errc::wav_unsupported_encoding, where + "format code " + std::to_string(format) +
                                                 " is not integer PCM");
      }
      if (channels < 1 || channels > 2) {
        fail(Errc::wav_unsupported_encoding, where + std::to_string(channels) + " channels (1 or 2 supported)");
      }
      if (bits != 16) {
        fail(Errc::wav_unsupported_bit_depth, where + std::to_string(bits) + "-bit samples (16 supported)");
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_size = available;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) fail(Errc::wav_malformed_header, where + "missing fmt chunk");
  if (!data) fail(Errc::wav_malformed_header, where + "missing data chunk");

  const std::size_t frame_bytes = 2u * channels;
  const std::size_t frames = data_size / frame_bytes;
  if (frames == 0) fail(Errc::wav_malformed_header, where + "no samples");

  Waveform wave;
  wave.sample_rate = rate;
  wave.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* f = data + i * frame_bytes;
    if (channels == 1) {
      wave.samples[i] = static_cast<std::int16_t>(read_u16(f)) / 32768.0;
    } else {
      const double left = static_cast<std::int16_t>(read_u16(f)) / 32768.0;
      const double right = static_cast<std::int16_t>(read_u16(f + 2)) / 32768.0;
      wave.samples[i] = 0.5 * (left + right);
    }
  }
  return wave;
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  const auto n = static_cast<std::uint32_t>(wave.samples.size());
  std::vector<unsigned char> out;
  out.reserve(44 + 2 * static_cast<std::size_t>(n));
  put_tag(out, "RIFF");
  put_u32(out, 36 + 2 * n);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, wave.sample_rate);
  put_u32(out, wave.sample_rate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, 2 * n);
  for (double s : wave.samples) {
    const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) fail(Errc::io_error, "cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) fail(Errc::io_error, "short write to " + path.string());
}

}  // namespace ssed::audio
