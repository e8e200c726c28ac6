#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "ssed/audio.hpp"
#include "ssed/error.hpp"

namespace ssed::audio {

namespace {

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

// One shared plan for the fixed FFT size. Planning is not thread-safe in
// FFTW, execution on fresh aligned buffers is.
class RealFft {
 public:
  static const RealFft& instance() {
    static RealFft fft;
    return fft;
  }

  RealBuffer make_input() const {
    return RealBuffer(static_cast<double*>(fftw_malloc(sizeof(double) * kFftSize)));
  }
  ComplexBuffer make_output() const {
    return ComplexBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (kFftSize / 2 + 1))));
  }
  void execute(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(plan_, in, out); }

 private:
  RealFft() {
    auto in = make_input();
    auto out = make_output();
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(kFftSize), in.get(), out.get(), FFTW_ESTIMATE);
    if (!plan_) fail(Errc::invalid_argument, "FFT planning failed");
  }
  ~RealFft() { fftw_destroy_plan(plan_); }

  fftw_plan plan_ = nullptr;
};

std::vector<double> periodic_hann(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank build_mel_filterbank(std::size_t n_fft, double sample_rate, std::size_t n_mels) {
  if (n_mels < 2) fail(Errc::invalid_argument, "n_mels must be >= 2");
  if (n_fft < 2 || sample_rate <= 0.0) fail(Errc::invalid_argument, "invalid FFT size or sample rate");
  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.n_bins = n_fft / 2 + 1;
  fb.sample_rate = sample_rate;
  if (n_mels > fb.n_bins) {
    fail(Errc::invalid_argument, std::to_string(n_mels) + " mel bands exceed the " +
                                     std::to_string(fb.n_bins) + " usable FFT bins");
  }

  const double mel_lo = hz_to_mel(0.0), mel_hi = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }

  fb.weights.assign(n_mels * fb.n_bins, 0.0);
  fb.center_hz.resize(n_mels);
  fb.support.resize(n_mels);
  const double bin_hz = sample_rate / static_cast<double>(n_fft);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], peak = edges[m + 1], hi = edges[m + 2];
    fb.center_hz[m] = peak;
    std::size_t first = fb.n_bins, last = 0;
    for (std::size_t k = 0; k < fb.n_bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      const double w = std::max(0.0, std::min((f - lo) / (peak - lo), (hi - f) / (hi - peak)));
      if (w > 0.0) {
        fb.weights[m * fb.n_bins + k] = w;
        first = std::min(first, k);
        last = std::max(last, k);
      }
    }
    if (first > last) {
      fail(Errc::invalid_argument, "mel filter " + std::to_string(m) + " covers no FFT bin; " +
                                       std::to_string(n_mels) + " bands exceed the usable resolution");
    }
    fb.support[m] = {first, last};
  }
  return fb;
}

std::size_t frames_for_clip(double clip_seconds) {
  const auto clip_samples = static_cast<std::size_t>(std::llround(clip_seconds * kSampleRate));
  const std::size_t padded = clip_samples + kHop;
  if (padded < kFrameLength) return 1;
  return (padded - kFrameLength) / kHop + 1;
}

LogMelSpectrogram log_mel(const Waveform& wave, const FrontendOptions& options) {
  if (wave.sample_rate != kSampleRate) {
    fail(Errc::wrong_sample_rate, "expected " + std::to_string(kSampleRate) + " Hz, got " +
                                      std::to_string(wave.sample_rate) + " Hz (no resampling)");
  }
  if (options.clip_seconds <= 0.0) fail(Errc::invalid_argument, "clip length must be positive");

  static const MelFilterbank fb = build_mel_filterbank();
  static const std::vector<double> window = periodic_hann(kFrameLength);

  const std::size_t frames = frames_for_clip(options.clip_seconds);
  const auto clip_samples = static_cast<std::size_t>(std::llround(options.clip_seconds * kSampleRate));
  std::vector<double> padded(std::max(clip_samples + kHop, (frames - 1) * kHop + kFrameLength), 0.0);
  std::copy_n(wave.samples.begin(), std::min(wave.samples.size(), clip_samples), padded.begin());

  const auto& fft = RealFft::instance();
  auto in = fft.make_input();
  auto out = fft.make_output();
  std::vector<double> power(fb.n_bins);

  LogMelSpectrogram spec;
  spec.frames = frames;
  spec.bands = fb.n_mels;
  spec.values.resize(frames * fb.n_mels);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* src = padded.data() + t * kHop;
    for (std::size_t i = 0; i < kFrameLength; ++i) in[i] = src[i] * window[i];
    std::fill(in.get() + kFrameLength, in.get() + kFftSize, 0.0);
    fft.execute(in.get(), out.get());
    for (std::size_t k = 0; k < fb.n_bins; ++k) power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    for (std::size_t m = 0; m < fb.n_mels; ++m) {
      double energy = 0.0;
      for (std::size_t k = fb.support[m].first; k <= fb.support[m].second; ++k) {
        energy += fb.weight(m, k) * power[k];
      }
      spec.values[t * fb.n_mels + m] = std::log(std::max(energy, kLogFloor));
    }
  }

  if (options.normalize) normalize_bands(spec);
  return spec;
}

void normalize_bands(LogMelSpectrogram& spec) {
  const std::size_t frames = spec.frames;
  for (std::size_t m = 0; m < spec.bands; ++m) {
    double mean = 0.0;
    for (std::size_t t = 0; t < frames; ++t) mean += spec.at(t, m);
    mean /= static_cast<double>(frames);
    double var = 0.0;
    for (std::size_t t = 0; t < frames; ++t) var += (spec.at(t, m) - mean) * (spec.at(t, m) - mean);
    const double sd = std::sqrt(var / static_cast<double>(frames));
    for (std::size_t t = 0; t < frames; ++t) {
      double& v = spec.values[t * spec.bands + m];
      v = sd > 0.0 ? (v - mean) / sd : 0.0;
    }
  }
}

}  // namespace ssed::audio
