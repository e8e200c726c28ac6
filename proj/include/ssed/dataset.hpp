#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssed/audio.hpp"
#include "ssed/tensor.hpp"

namespace ssed::data {

inline constexpr double kHopSeconds = 0.02;
inline constexpr double kFrameSeconds = 0.04;

class EventVocabulary {
 public:
  EventVocabulary() = default;
  // Labels must be unique; their order fixes the class index.
  explicit EventVocabulary(std::vector<std::string> labels);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t index) const { return labels_.at(index); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::size_t> index(const std::string& label) const;

 private:
  std::vector<std::string> labels_;
};

struct EventAnnotation {
  double onset = 0.0;   // seconds
  double offset = 0.0;  // seconds, > onset
  std::string label;
};

struct ClipRecord {
  std::string clip_id;
  std::filesystem::path source;  // .wav, or a .lmel feature cache
  std::string scene_label;
  std::vector<EventAnnotation> annotations;
};

struct Corpus {
  std::vector<ClipRecord> clips;  // sorted by clip_id
  EventVocabulary vocabulary;
};

/// meta: TSV rows clip_id<TAB>path<TAB>scene_label (paths relative to the
/// meta file). Annotations: <annotations_dir>/<clip_id>.ann with rows
/// onset<TAB>offset<TAB>event_label. Without an explicit vocabulary, the
/// vocabulary is the sorted set of all annotated labels.
Corpus load_corpus(const std::filesystem::path& meta_path,
                   const std::filesystem::path& annotations_dir,
                   const std::optional<std::vector<std::string>>& vocabulary = std::nullopt);

// <dir>/meta.tsv, <dir>/annotations/, and <dir>/vocab.txt (one label per
// line) when present.
Corpus load_corpus_dir(const std::filesystem::path& dir);

void write_vocabulary(const std::filesystem::path& path, const EventVocabulary& vocab);

struct FrameTargets {
  std::size_t events = 0;
  std::size_t frames = 0;
  std::vector<std::uint8_t> z;  // events x frames

  std::uint8_t at(std::size_t n, std::size_t t) const { return z[n * frames + t]; }
  std::size_t active() const;
};

// Activity rule: frame t spans [t*hop, t*hop + frame_len); an event is
// active in it when the two half-open intervals overlap. Boundaries that
// only touch (within 1e-9 s) do not count.
bool interval_overlaps_frame(double onset, double offset, std::size_t t,
                             double hop = kHopSeconds, double frame_len = kFrameSeconds);

// Labels absent from the vocabulary are ignored; frames beyond `frames` are clipped.
FrameTargets rasterize_targets(const std::vector<EventAnnotation>& annotations,
                               const EventVocabulary& vocab, std::size_t frames,
                               double hop = kHopSeconds, double frame_len = kFrameSeconds);

struct Example {
  std::string clip_id;
  std::string scene_label;
  Tensor features;  // frames x bands
  FrameTargets targets;
  // Frames that cover real audio (the rest is zero padding of a short clip).
  std::size_t valid_frames = 0;
};

audio::LogMelSpectrogram load_features(const ClipRecord& clip,
                                       const audio::FrontendOptions& options = {});

std::vector<Example> materialize(const Corpus& corpus, const audio::FrontendOptions& options = {});

// Deterministic 80/20 split on the FNV-1a hash of the clip id.
bool is_evaluation_clip(const std::string& clip_id);

struct Batch {
  std::vector<const Example*> items;
};

/// Splits `examples` into batches for one epoch. The order is a
/// deterministic shuffle keyed by (shuffle_seed, epoch); every example
/// appears exactly once.
std::vector<Batch> batches(const std::vector<Example>& examples, std::size_t batch_size,
                           std::uint64_t shuffle_seed, std::size_t epoch);

std::vector<std::size_t> epoch_order(std::size_t count, std::uint64_t shuffle_seed, std::size_t epoch);

// --- synthetic corpus -------------------------------------------------------

struct EventProfile {
  std::string label;
  double probability = 0.0;  // chance that a clip of the scene contains one instance
  double min_duration = 0.2;
  double max_duration = 1.0;
};

struct SceneProfile {
  std::string scene;
  std::vector<EventProfile> events;
};

// Spectral shape of an event in log-mel space: Gaussian bump over bands.
// Events sharing a shape are acoustically indistinguishable.
struct EventSignature {
  std::string label;
  double center_band = 0.0;
  double width = 2.0;
  double gain = 3.0;
};

struct SyntheticOptions {
  std::uint64_t seed = 0;
  std::size_t n_clips = 200;
  double clip_seconds = 10.0;
  std::size_t n_mels = audio::kMelBands;
  double background = -2.0;
  double noise_std = 0.5;
  std::vector<SceneProfile> scenes;
  std::vector<EventSignature> signatures;
  // Write sine-tone WAV files instead of synthesizing log-mel features.
  bool wav = false;
};

/// Two scenes ("home", "city center") with disjoint dominant events. Each
/// home event shares its spectral signature with one city-center event, so
/// only scene context separates the pair; "people talking" occurs in both.
SyntheticOptions default_synthetic_options(std::uint64_t seed, std::size_t n_clips,
                                           double clip_seconds = 10.0);

void make_synthetic_corpus(const SyntheticOptions& options, const std::filesystem::path& out_dir);

}  // namespace ssed::data
