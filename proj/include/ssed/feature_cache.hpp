#pragma once

#include <filesystem>

#include "ssed/audio.hpp"

namespace ssed::audio {

// Binary layout, little-endian:
//   bytes 0-3   "LMEL"
//   bytes 4-7   u32 frame count T
//   bytes 8-11  u32 band count F
//   bytes 12-15 reserved, written as zero
//   then T*F float32 values, row-major by frame.
void write_feature_cache(const std::filesystem::path& path, const LogMelSpectrogram& spec);
LogMelSpectrogram read_feature_cache(const std::filesystem::path& path);

// Rounds every value to float32, i.e. what a cache round trip returns.
LogMelSpectrogram quantize_to_cache_precision(LogMelSpectrogram spec);

}  // namespace ssed::audio
