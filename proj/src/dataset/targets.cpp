#include <algorithm>
#include <cmath>

#include "ssed/dataset.hpp"
#include "ssed/error.hpp"

namespace ssed::data {

namespace {
constexpr double kTouch = 1e-9;
}

std::size_t FrameTargets::active() const {
  return static_cast<std::size_t>(std::count(z.begin(), z.end(), std::uint8_t{1}));
}

bool interval_overlaps_frame(double onset, double offset, std::size_t t, double hop, double frame_len) {
  const double start = static_cast<double>(t) * hop;
  return onset < start + frame_len - kTouch && offset > start + kTouch;
}

FrameTargets rasterize_targets(const std::vector<EventAnnotation>& annotations, const EventVocabulary& vocab,
                               std::size_t frames, double hop, double frame_len) {
  if (frames == 0) fail(Errc::invalid_argument, "rasterize_targets needs at least one frame");
  if (!(hop > 0.0) || !(frame_len > 0.0)) fail(Errc::invalid_argument, "hop and frame length must be positive");
  FrameTargets out;
  out.events = vocab.size();
  out.frames = frames;
  out.z.assign(out.events * frames, 0);
  for (const auto& a : annotations) {
    auto n = vocab.index(a.label);
    if (!n) continue;
    // Candidate window, widened by one frame each side; the predicate decides.
    const double lo = std::floor((a.onset - frame_len) / hop) - 1.0;
    const double hi = std::ceil(a.offset / hop) + 1.0;
    if (hi < 0.0) continue;
    const auto t0 = static_cast<std::size_t>(std::max(lo, 0.0));
    const auto t1 = std::min(frames - 1, static_cast<std::size_t>(std::min(hi, static_cast<double>(frames))));
    for (std::size_t t = t0; t <= t1 && t < frames; ++t) {
      if (interval_overlaps_frame(a.onset, a.offset, t, hop, frame_len)) out.z[*n * frames + t] = 1;
    }
  }
  return out;
}

}  // namespace ssed::data
