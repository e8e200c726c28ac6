#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "ssed/dataset.hpp"
#include "ssed/error.hpp"
#include "ssed/feature_cache.hpp"
#include "ssed/rng.hpp"

namespace ssed::data {

namespace {

constexpr double kDominant = 0.5;

void validate(const SyntheticOptions& o) {
  if (o.n_clips == 0) fail(Errc::invalid_argument, "n_clips must be positive");
  if (!(o.clip_seconds > 0.0)) fail(Errc::invalid_argument, "clip_seconds must be positive");
  if (o.scenes.size() < 2) fail(Errc::invalid_argument, "synthetic corpus needs at least 2 scene profiles");
  std::map<std::string, std::string> dominant_owner;
  std::set<std::string> scene_names;
  for (const auto& s : o.scenes) {
    if (s.scene.empty()) fail(Errc::invalid_argument, "scene profile with empty name");
    if (!scene_names.insert(s.scene).second) fail(Errc::invalid_argument, "duplicate scene profile '" + s.scene + "'");
    for (const auto& e : s.events) {
      if (!(e.probability >= 0.0 && e.probability <= 1.0)) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%g", e.probability);
        fail(Errc::invalid_probability,
             "scene '" + s.scene + "' event '" + e.label + "': probability " + buf + " outside [0,1]");
      }
      if (!(e.min_duration > 0.0) || e.max_duration < e.min_duration || e.max_duration > o.clip_seconds) {
        fail(Errc::invalid_argument, "scene '" + s.scene + "' event '" + e.label +
                                         "': need 0 < min_duration <= max_duration <= clip_seconds");
      }
      if (e.probability >= kDominant) {
        auto [it, fresh] = dominant_owner.emplace(e.label, s.scene);
        if (!fresh) {
          fail(Errc::invalid_argument, "event '" + e.label + "' is dominant in both '" + it->second + "' and '" +
                                           s.scene + "'; dominant event sets must be disjoint");
        }
      }
      bool has_signature = std::any_of(o.signatures.begin(), o.signatures.end(),
                                       [&](const EventSignature& g) { return g.label == e.label; });
      if (!has_signature) fail(Errc::invalid_argument, "event '" + e.label + "' has no spectral signature");
    }
  }
}

double to_ms(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

std::string clip_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "clip_%04zu", i);
  return buf;
}

audio::Waveform render_wav(const std::vector<EventAnnotation>& annotations,
                           const std::map<std::string, const EventSignature*>& signatures, double clip_seconds,
                           Rng& rng) {
  static const auto fb = audio::build_mel_filterbank();
  audio::Waveform w;
  w.samples.resize(static_cast<std::size_t>(std::llround(clip_seconds * audio::kSampleRate)));
  for (auto& s : w.samples) s = 0.003 * rng.uniform(-1.0, 1.0);
  for (const auto& a : annotations) {
    const auto* sig = signatures.at(a.label);
    const auto band = static_cast<std::size_t>(std::clamp(std::lround(sig->center_band), 0L,
                                                          static_cast<long>(fb.n_mels - 1)));
    const double hz = fb.center_hz[band];
    const double amp = 0.1 * sig->gain / 3.0;
    const auto i0 = static_cast<std::size_t>(a.onset * audio::kSampleRate);
    const auto i1 = std::min(w.samples.size(), static_cast<std::size_t>(a.offset * audio::kSampleRate));
    for (std::size_t i = i0; i < i1; ++i) {
      w.samples[i] += amp * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / audio::kSampleRate);
    }
  }
  for (auto& s : w.samples) s = std::clamp(s, -1.0, 1.0);
  return w;
}

}  // namespace

SyntheticOptions default_synthetic_options(std::uint64_t seed, std::size_t n_clips, double clip_seconds) {
  SyntheticOptions o;
  o.seed = seed;
  o.n_clips = n_clips;
  o.clip_seconds = clip_seconds;
  const double lo = 0.1 * clip_seconds;
  const double hi = 0.4 * clip_seconds;
  o.scenes = {
      {"home",
       {{"dishes", 0.6, lo, hi},
        {"cutlery", 0.6, lo, hi},
        {"water tap running", 0.6, lo, hi},
        {"brakes squeaking", 0.05, lo, hi},
        {"car", 0.05, lo, hi},
        {"large vehicle", 0.05, lo, hi},
        {"people talking", 0.4, lo, hi}}},
      {"city center",
       {{"brakes squeaking", 0.6, lo, hi},
        {"car", 0.6, lo, hi},
        {"large vehicle", 0.6, lo, hi},
        {"dishes", 0.05, lo, hi},
        {"cutlery", 0.05, lo, hi},
        {"water tap running", 0.05, lo, hi},
        {"people talking", 0.4, lo, hi}}},
  };
  o.signatures = {
      {"dishes", 12.0, 2.5, 3.0},  {"brakes squeaking", 12.0, 2.5, 3.0},
      {"cutlery", 28.0, 2.5, 3.0}, {"car", 28.0, 2.5, 3.0},
      {"water tap running", 44.0, 2.5, 3.0}, {"large vehicle", 44.0, 2.5, 3.0},
      {"people talking", 56.0, 2.5, 3.0},
  };
  return o;
}

void make_synthetic_corpus(const SyntheticOptions& options, const std::filesystem::path& out_dir) {
  validate(options);
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "annotations");
  fs::create_directories(out_dir / (options.wav ? "audio" : "features"));

  std::set<std::string> labels;
  for (const auto& s : options.scenes)
    for (const auto& e : s.events) labels.insert(e.label);
  const EventVocabulary vocab({labels.begin(), labels.end()});
  write_vocabulary(out_dir / "vocab.txt", vocab);

  std::map<std::string, const EventSignature*> signature_of;
  for (const auto& g : options.signatures) signature_of.emplace(g.label, &g);

  const std::size_t frames = audio::frames_for_clip(options.clip_seconds);
  std::ofstream meta(out_dir / "meta.tsv");
  if (!meta) fail(Errc::io_error, "cannot write " + (out_dir / "meta.tsv").string());
  meta << "clip_id\tpath\tscene_label\n";

  for (std::size_t i = 0; i < options.n_clips; ++i) {
    Rng rng(derive_seed(options.seed, i));
    const auto& scene = options.scenes[rng.uniform_int(options.scenes.size())];
    const std::string id = clip_name(i);

    std::vector<EventAnnotation> annotations;
    for (const auto& e : scene.events) {
      if (!rng.bernoulli(e.probability)) continue;
      const double duration = rng.uniform(e.min_duration, e.max_duration);
      double onset = to_ms(rng.uniform(0.0, options.clip_seconds - duration));
      double offset = std::min(to_ms(onset + duration), to_ms(options.clip_seconds));
      if (offset <= onset) offset = onset + 0.001;
      annotations.push_back({onset, offset, e.label});
    }
    std::sort(annotations.begin(), annotations.end(),
              [](const EventAnnotation& a, const EventAnnotation& b) { return a.onset < b.onset; });

    {
      std::ofstream ann(out_dir / "annotations" / (id + ".ann"));
      char buf[64];
      for (const auto& a : annotations) {
        std::snprintf(buf, sizeof buf, "%.3f\t%.3f\t", a.onset, a.offset);
        ann << buf << a.label << '\n';
      }
    }

    if (options.wav) {
      const std::string rel = "audio/" + id + ".wav";
      audio::write_wav(out_dir / rel, render_wav(annotations, signature_of, options.clip_seconds, rng));
      meta << id << '\t' << rel << '\t' << scene.scene << '\n';
      continue;
    }

    const auto z = rasterize_targets(annotations, vocab, frames);
    audio::LogMelSpectrogram spec;
    spec.frames = frames;
    spec.bands = options.n_mels;
    spec.values.resize(frames * options.n_mels);
    for (std::size_t t = 0; t < frames; ++t) {
      for (std::size_t f = 0; f < options.n_mels; ++f) {
        spec.values[t * options.n_mels + f] = options.background + options.noise_std * rng.normal();
      }
    }
    for (std::size_t n = 0; n < vocab.size(); ++n) {
      const auto* sig = signature_of.at(vocab.label(n));
      for (std::size_t t = 0; t < frames; ++t) {
        if (!z.at(n, t)) continue;
        for (std::size_t f = 0; f < options.n_mels; ++f) {
          const double d = (static_cast<double>(f) - sig->center_band) / sig->width;
          spec.values[t * options.n_mels + f] += sig->gain * std::exp(-0.5 * d * d);
        }
      }
    }
    const std::string rel = "features/" + id + ".lmel";
    audio::write_feature_cache(out_dir / rel, spec);
    meta << id << '\t' << rel << '\t' << scene.scene << '\n';
  }
  if (!meta) fail(Errc::io_error, "short write to " + (out_dir / "meta.tsv").string());
}

}  // namespace ssed::data
