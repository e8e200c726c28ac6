#include <algorithm>
#include <cmath>

#include "internal.hpp"
#include "ssed/error.hpp"
#include "ssed/ops.hpp"

namespace ssed::trainer {

namespace detail {

Tensor targets_tensor(const data::FrameTargets& targets) {
  return Tensor::from_data({targets.events, targets.frames}, std::vector<double>(targets.z.begin(), targets.z.end()));
}

std::vector<data::Example> load_examples(const data::Corpus& corpus, const audio::FrontendOptions& options,
                                         const model::NetworkConfig& net) {
  auto examples = data::materialize(corpus, options);
  for (const auto& ex : examples) {
    if (ex.features.dim(0) != net.sed.frames || ex.features.dim(1) != net.sed.n_mels) {
      fail(Errc::config_error, "clip '" + ex.clip_id + "' has features " + shape_str(ex.features.shape()) +
                                   " but the network expects [" + std::to_string(net.sed.frames) + ", " +
                                   std::to_string(net.sed.n_mels) + "] (check clip_seconds)");
    }
  }
  return examples;
}

data::Corpus load_corpus_with_vocabulary(const std::filesystem::path& dir, const data::EventVocabulary& vocab) {
  return data::load_corpus(dir / "meta.tsv", dir / "annotations", vocab.labels());
}

data::Corpus select_clips(const data::Corpus& corpus, ClipSelection selection) {
  if (selection == ClipSelection::all) return corpus;
  data::Corpus out{{}, corpus.vocabulary};
  for (const auto& clip : corpus.clips) {
    if (data::is_evaluation_clip(clip.clip_id) == (selection == ClipSelection::eval)) out.clips.push_back(clip);
  }
  return out;
}

std::string scene_mode_name(scene::SceneMode mode) {
  switch (mode) {
    case scene::SceneMode::none: return "none";
    case scene::SceneMode::onehot: return "onehot";
    case scene::SceneMode::embedding: return "embedding";
  }
  return "none";
}

}  // namespace detail

ContextResolver::ContextResolver(scene::SceneMode mode, scene::OneHotCodebook codebook,
                                 std::optional<scene::EmbeddingTable> table)
    : mode_(mode), codebook_(std::move(codebook)), table_(std::move(table)) {
  if (mode_ == scene::SceneMode::embedding && !table_)
    fail(Errc::config_error, "embedding mode needs an embedding table");
}

std::size_t ContextResolver::dim() const {
  switch (mode_) {
    case scene::SceneMode::none: return 0;
    case scene::SceneMode::onehot: return codebook_.size();
    case scene::SceneMode::embedding: return table_->dim();
  }
  return 0;
}

Tensor ContextResolver::resolve(const std::string& label) const {
  switch (mode_) {
    case scene::SceneMode::none: return {};
    case scene::SceneMode::onehot: return Tensor::from_data({codebook_.size()}, codebook_.encode(label));
    case scene::SceneMode::embedding: return Tensor::from_data({table_->dim()}, table_->lookup(label));
  }
  return {};
}

Trained load_trained(const std::filesystem::path& checkpoint, const ContextSource& source) {
  auto loaded = model::load_checkpoint(checkpoint);
  const auto& meta = loaded.metadata;
  try {
    const auto mode_name = meta.at("representation_mode").get<std::string>();
    scene::SceneMode mode = mode_name == "onehot"      ? scene::SceneMode::onehot
                            : mode_name == "embedding" ? scene::SceneMode::embedding
                                                       : scene::SceneMode::none;
    std::optional<scene::EmbeddingTable> table;
    if (mode == scene::SceneMode::embedding) {
      const std::filesystem::path path =
          source.table ? *source.table : std::filesystem::path(meta.at("table").get<std::string>());
      table = scene::load_table(path);
    }
    ContextResolver context(mode, scene::OneHotCodebook(meta.at("codebook").get<std::vector<std::string>>()),
                            std::move(table));
    const auto& net = loaded.network.config();
    if (context.dim() != (net.sed.fusion == model::Fusion::none ? 0 : net.sed.context_dim)) {
      fail(Errc::config_error, "scene vectors have " + std::to_string(context.dim()) +
                                   " components but the checkpoint expects " + std::to_string(net.sed.context_dim));
    }
    return Trained{std::move(loaded.network),
                   std::move(context),
                   data::EventVocabulary(meta.at("vocabulary").get<std::vector<std::string>>()),
                   meta.at("threshold").get<double>(),
                   meta.at("clip_seconds").get<double>(),
                   meta.at("normalize_features").get<bool>(),
                   meta};
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::checkpoint_error, checkpoint.string() + ": checkpoint metadata: " + e.what());
  }
}

namespace {

Tensor context_for(const Trained& trained, const std::string& clip_scene, const ContextSource& source) {
  if (source.none) {
    if (trained.context.mode() != scene::SceneMode::none)
      fail(Errc::config_error, "context 'none' is valid only for checkpoints trained without scene context");
    return {};
  }
  return trained.context.resolve(source.label.value_or(clip_scene));
}

}  // namespace

eval::ScoreReport evaluate(const Trained& trained, const std::vector<data::Example>& examples,
                           const ContextSource& source) {
  // Resolve every context before running anything.
  std::vector<Tensor> contexts;
  contexts.reserve(examples.size());
  for (const auto& ex : examples) contexts.push_back(context_for(trained, ex.scene_label, source));

  NoGradGuard no_grad;
  eval::SegmentCounts counts(trained.vocabulary.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    auto logits = trained.network.forward(ex.features, contexts[i]).logits;
    auto pred = model::predict_events(logits.data(), trained.threshold);
    counts.accumulate(ex.targets.z, pred, ex.targets.frames);
  }
  return eval::score_report(counts, trained.vocabulary.labels());
}

eval::ScoreReport evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& corpus,
                           const ContextSource& source, ClipSelection clips) {
  auto trained = load_trained(checkpoint, source);
  auto c = detail::select_clips(detail::load_corpus_with_vocabulary(corpus, trained.vocabulary), clips);
  if (c.clips.empty()) fail(Errc::empty_corpus, "no clips to evaluate in " + corpus.string());
  // Unresolvable contexts surface before any feature is loaded.
  for (const auto& clip : c.clips) context_for(trained, clip.scene_label, source);
  auto examples =
      detail::load_examples(c, {trained.clip_seconds, trained.normalize_features}, trained.network.config());
  return evaluate(trained, examples, source);
}

Inference infer(const Trained& trained, const data::Example& clip, const std::string& context_label) {
  auto context = trained.context.resolve(context_label);
  NoGradGuard no_grad;
  auto logits = trained.network.forward(clip.features, context).logits;
  Inference out;
  out.clip_id = clip.clip_id;
  out.context_label = context_label;
  out.events = trained.vocabulary.labels();
  out.frames = logits.dim(1);
  out.activations.reserve(logits.numel());
  for (double y : logits.data()) out.activations.push_back(1.0 / (1.0 + std::exp(-y)));
  out.decisions = model::predict_events(logits.data(), trained.threshold);
  return out;
}

Inference infer_unseen(const std::filesystem::path& checkpoint, const std::filesystem::path& corpus,
                       const std::string& clip_id, const std::string& context_label,
                       const std::optional<std::filesystem::path>& table) {
  ContextSource source;
  source.table = table;
  auto trained = load_trained(checkpoint, source);
  auto c = detail::load_corpus_with_vocabulary(corpus, trained.vocabulary);
  auto it = std::find_if(c.clips.begin(), c.clips.end(), [&](const auto& r) { return r.clip_id == clip_id; });
  if (it == c.clips.end()) fail(Errc::invalid_argument, "no clip '" + clip_id + "' in " + corpus.string());
  trained.context.resolve(context_label);
  data::Corpus one{{*it}, c.vocabulary};
  auto examples =
      detail::load_examples(one, {trained.clip_seconds, trained.normalize_features}, trained.network.config());
  return infer(trained, examples.front(), context_label);
}

nlohmann::json to_json(const Inference& inference) {
  nlohmann::json events = nlohmann::json::array();
  for (std::size_t n = 0; n < inference.events.size(); ++n) {
    const auto begin = n * inference.frames;
    std::vector<double> act(inference.activations.begin() + begin,
                            inference.activations.begin() + begin + inference.frames);
    std::vector<int> dec(inference.decisions.begin() + begin, inference.decisions.begin() + begin + inference.frames);
    events.push_back({{"label", inference.events[n]},
                      {"active_frames", std::count(dec.begin(), dec.end(), 1)},
                      {"activations", act},
                      {"decisions", dec}});
  }
  return {{"clip_id", inference.clip_id},
          {"context_label", inference.context_label},
          {"frames", inference.frames},
          {"events", events}};
}

}  // namespace ssed::trainer
