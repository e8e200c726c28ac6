#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace ssed::audio {

inline constexpr std::uint32_t kSampleRate = 44100;
inline constexpr std::size_t kFrameLength = 1764;  // 40 ms at 44.1 kHz
inline constexpr std::size_t kHop = 882;           // 20 ms, 50% overlap
inline constexpr std::size_t kFftSize = 2048;
inline constexpr std::size_t kMelBands = 64;
inline constexpr double kLogFloor = 1e-10;

struct Waveform {
  std::vector<double> samples;  // mono, in [-1, 1]
  std::uint32_t sample_rate = kSampleRate;
};

// RIFF/WAVE, 16-bit PCM, mono or stereo (averaged). Samples scale by 1/32768.
Waveform load_wav(const std::filesystem::path& path);

// Mono 16-bit PCM; samples are rounded to the nearest step of 1/32768 and
// clipped to the int16 range.
void write_wav(const std::filesystem::path& path, const Waveform& wave);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t n_bins = 0;  // n_fft / 2 + 1
  double sample_rate = 0.0;
  std::vector<double> weights;     // n_mels x n_bins, row-major
  std::vector<double> center_hz;   // peak frequency per filter
  // Inclusive range of bins with nonzero weight for each filter.
  std::vector<std::pair<std::size_t, std::size_t>> support;

  double weight(std::size_t mel, std::size_t bin) const { return weights[mel * n_bins + bin]; }
};

// Triangular filters with peaks equally spaced on mel(f) = 2595 log10(1 + f/700)
// between fmin = 0 and fmax = sample_rate / 2.
MelFilterbank build_mel_filterbank(std::size_t n_fft = kFftSize, double sample_rate = kSampleRate,
                                   std::size_t n_mels = kMelBands);

struct LogMelSpectrogram {
  std::size_t frames = 0;
  std::size_t bands = 0;
  std::vector<double> values;  // frames x bands, row-major by frame

  double at(std::size_t t, std::size_t f) const { return values[t * bands + f]; }
};

struct FrontendOptions {
  double clip_seconds = 10.0;
  // Per-band standardization over the clip. Off by default.
  bool normalize = false;
};

/// Frame t covers samples [882 t, 882 t + 1764). The waveform is zero-padded
/// or truncated to clip_seconds plus one hop, which gives exactly
/// clip_seconds / 0.02 frames (500 for a 10 s clip).
LogMelSpectrogram log_mel(const Waveform& wave, const FrontendOptions& options = {});

std::size_t frames_for_clip(double clip_seconds);

// Zero mean, unit variance per band over frames; constant bands become 0.
void normalize_bands(LogMelSpectrogram& spec);

}  // namespace ssed::audio
