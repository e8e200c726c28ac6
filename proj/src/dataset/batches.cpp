#include <algorithm>
#include <numeric>

#include "ssed/dataset.hpp"
#include "ssed/error.hpp"
#include "ssed/feature_cache.hpp"
#include "ssed/rng.hpp"

namespace ssed::data {

audio::LogMelSpectrogram load_features(const ClipRecord& clip, const audio::FrontendOptions& options) {
  if (clip.source.empty()) fail(Errc::io_error, "clip '" + clip.clip_id + "' has no audio or feature path");
  if (clip.source.extension() == ".lmel") {
    auto spec = audio::read_feature_cache(clip.source);
    if (options.normalize) audio::normalize_bands(spec);
    return spec;
  }
  return audio::log_mel(audio::load_wav(clip.source), options);
}

namespace {

// Frames holding at least one real sample; the rest are zero padding.
std::size_t frames_with_audio(const ClipRecord& clip, std::size_t frames) {
  if (clip.source.extension() == ".lmel") return frames;
  const auto samples = audio::load_wav(clip.source).samples.size();
  return std::min(frames, (samples + audio::kHop - 1) / audio::kHop);
}

}  // namespace

std::vector<Example> materialize(const Corpus& corpus, const audio::FrontendOptions& options) {
  std::vector<Example> out;
  out.reserve(corpus.clips.size());
  for (const auto& clip : corpus.clips) {
    auto spec = load_features(clip, options);
    Example ex;
    ex.clip_id = clip.clip_id;
    ex.scene_label = clip.scene_label;
    ex.targets = rasterize_targets(clip.annotations, corpus.vocabulary, spec.frames);
    ex.valid_frames = frames_with_audio(clip, spec.frames);
    ex.features = Tensor::from_data({spec.frames, spec.bands}, std::move(spec.values));
    out.push_back(std::move(ex));
  }
  return out;
}

bool is_evaluation_clip(const std::string& clip_id) { return fnv1a(clip_id) % 5 == 0; }

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t shuffle_seed, std::size_t epoch) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(shuffle_seed, epoch));
  // Fisher-Yates on our own uniform_int so the order is toolchain-independent.
  for (std::size_t i = count; i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_int(i)]);
  }
  return order;
}

std::vector<Batch> batches(const std::vector<Example>& examples, std::size_t batch_size,
                           std::uint64_t shuffle_seed, std::size_t epoch) {
  if (examples.empty()) fail(Errc::empty_corpus, "cannot batch an empty corpus");
  if (batch_size == 0) fail(Errc::invalid_argument, "batch_size must be at least 1");
  std::vector<Batch> out;
  auto order = epoch_order(examples.size(), shuffle_seed, epoch);
  for (std::size_t i = 0; i < order.size(); i += batch_size) {
    Batch b;
    for (std::size_t j = i; j < std::min(order.size(), i + batch_size); ++j) b.items.push_back(&examples[order[j]]);
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace ssed::data
