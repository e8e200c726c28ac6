#include <chrono>
#include <fstream>
#include <map>
#include <set>

#include "internal.hpp"
#include "ssed/error.hpp"
#include "ssed/ops.hpp"
#include "ssed/optimizer.hpp"
#include "ssed/rng.hpp"

namespace ssed::trainer {

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) fail(Errc::io_error, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

bool is_validation_clip(const std::string& clip_id) { return derive_seed(fnv1a(clip_id), 1) % 5 == 0; }

nlohmann::json breakdown_json(const objective::LossBreakdown& b) {
  return {{"l_sed", b.l_sed}, {"l_ae", b.l_ae}, {"l_align", b.l_align}, {"total", b.total}};
}

nlohmann::json strides_json(const model::Network& net) {
  if (!net.aligned()) return nullptr;
  const auto& plan = net.decoder_plan();
  nlohmann::json strides = nlohmann::json::array();
  for (const auto& s : plan.strides) strides.push_back({s.h, s.w});
  return {{"seed", {plan.seed.h, plan.seed.w}}, {"strides", strides}};
}

struct Splits {
  data::Corpus train, validation, eval;
};

Splits split_corpus(const data::Corpus& corpus, const ExperimentConfig& config) {
  Splits s{{{}, corpus.vocabulary}, {{}, corpus.vocabulary}, {{}, corpus.vocabulary}};
  for (const auto& clip : corpus.clips) {
    const bool eval = config.split == Split::all || data::is_evaluation_clip(clip.clip_id);
    const bool train = config.split == Split::all || !eval;
    if (eval) s.eval.clips.push_back(clip);
    if (!train) continue;
    if (config.validation && is_validation_clip(clip.clip_id)) {
      s.validation.clips.push_back(clip);
    } else {
      s.train.clips.push_back(clip);
    }
  }
  if (s.train.clips.empty()) fail(Errc::empty_corpus, "no training clips in " + config.corpus.string());
  if (s.eval.clips.empty()) fail(Errc::empty_corpus, "no evaluation clips in " + config.corpus.string());
  if (config.validation && s.validation.clips.empty())
    fail(Errc::empty_corpus, "validation requested but no clip falls in the validation split");
  return s;
}

ContextResolver make_resolver(const ExperimentConfig& config, const data::Corpus& train) {
  std::set<std::string> scenes;
  for (const auto& clip : train.clips) scenes.insert(scene::normalize_label(clip.scene_label));
  scene::OneHotCodebook codebook;
  std::optional<scene::EmbeddingTable> table;
  if (config.representation.mode == scene::SceneMode::onehot) {
    codebook = scene::OneHotCodebook({scenes.begin(), scenes.end()});
  }
  if (config.representation.mode == scene::SceneMode::embedding) {
    table = scene::load_table(config.representation.table);
  }
  return ContextResolver(config.representation.mode, std::move(codebook), std::move(table));
}

nlohmann::json metadata_json(const ExperimentConfig& config, const ContextResolver& context,
                             const data::EventVocabulary& vocab) {
  return {
      {"representation", config.representation.str()},
      {"representation_mode", detail::scene_mode_name(context.mode())},
      {"table", context.mode() == scene::SceneMode::embedding ? nlohmann::json(config.representation.table.string())
                                                              : nlohmann::json(nullptr)},
      {"codebook", context.codebook().labels()},
      {"vocabulary", vocab.labels()},
      {"threshold", config.threshold},
      {"clip_seconds", config.clip_seconds},
      {"normalize_features", config.normalize_features},
      {"mask_padding", config.mask_padding},
      {"corpus", config.corpus.string()},
      {"seed", config.seed},
      {"code_version", code_version()},
  };
}

}  // namespace

RunResult train(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();

  // Everything that can be wrong with the configuration fails here, before
  // the first gradient step.
  auto corpus = data::load_corpus_dir(config.corpus);
  if (corpus.clips.empty()) fail(Errc::empty_corpus, "corpus " + config.corpus.string() + " has no clips");
  auto splits = split_corpus(corpus, config);
  auto context = make_resolver(config, splits.train);
  std::map<std::string, Tensor> scene_vectors;
  for (const auto* part : {&splits.train, &splits.validation, &splits.eval}) {
    for (const auto& clip : part->clips) {
      if (!scene_vectors.count(clip.scene_label))
        scene_vectors.emplace(clip.scene_label, context.resolve(clip.scene_label));
    }
  }

  model::NetworkConfig net_config = config.model;
  net_config.sed.n_events = corpus.vocabulary.size();
  net_config.sed.frames = audio::frames_for_clip(config.clip_seconds);
  net_config.sed.n_mels = audio::kMelBands;
  net_config.sed.fusion = config.fusion;
  net_config.sed.context_dim = context.dim();
  net_config.validate();

  const audio::FrontendOptions frontend{config.clip_seconds, config.normalize_features};
  auto train_set = detail::load_examples(splits.train, frontend, net_config);
  auto validation_set = detail::load_examples(splits.validation, frontend, net_config);
  auto eval_set = detail::load_examples(splits.eval, frontend, net_config);
  std::vector<Tensor> targets;
  targets.reserve(train_set.size());
  for (const auto& ex : train_set) targets.push_back(detail::targets_tensor(ex.targets));

  model::Network net(net_config, config.seed);
  AdaBelief optimizer(net.parameters(), {config.lr});
  const auto metadata = metadata_json(config, context, corpus.vocabulary);
  Trained scorer{net, context, corpus.vocabulary, config.threshold, config.clip_seconds, config.normalize_features,
                 metadata};
  std::filesystem::create_directories(config.output_dir);

  RunResult result;
  result.checkpoint = config.output_dir / "checkpoint";
  double best_micro = -1.0;
  const bool aligned = net.aligned();
  std::map<const data::Example*, std::size_t> index;
  for (std::size_t i = 0; i < train_set.size(); ++i) index[&train_set[i]] = i;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    objective::LossBreakdown sum;
    for (const auto& batch : data::batches(train_set, config.batch_size, config.seed, epoch)) {
      optimizer.zero_grad();
      const double inv_b = 1.0 / static_cast<double>(batch.items.size());
      for (const auto* ex : batch.items) {
        auto trace = net.forward(ex->features, scene_vectors.at(ex->scene_label));
        auto l_sed = objective::loss_sed(trace.logits, targets[index.at(ex)],
                                          config.mask_padding ? ex->valid_frames : objective::kAllFrames);
        Tensor l_ae, l_align;
        if (aligned) {
          l_ae = objective::loss_ae(ex->features, trace.x_hat);
          l_align = objective::loss_align(trace.l_shared, trace.z_shared);
        }
        auto total = objective::combine_losses(l_sed, l_ae, l_align, config.weights, aligned);
        backward(ops::scale(total, inv_b));
        sum.l_sed += l_sed.item();
        if (aligned) {
          sum.l_ae += l_ae.item();
          sum.l_align += l_align.item();
        }
        sum.total += total.item();
      }
      optimizer.step();
    }
    const double n = static_cast<double>(train_set.size());
    EpochLog log{epoch + 1, {sum.l_sed / n, sum.l_ae / n, sum.l_align / n, sum.total / n}, std::nullopt};
    if (config.validation) {
      const double micro = evaluate(scorer, validation_set).micro_f;
      log.validation_micro_f = micro;
      if (micro > best_micro) {
        best_micro = micro;
        result.best_checkpoint = config.output_dir / "best";
        auto best_meta = metadata;
        best_meta["epoch"] = epoch + 1;
        best_meta["validation_micro_f"] = micro;
        model::save_checkpoint(*result.best_checkpoint, net, best_meta);
      }
    }
    result.epochs.push_back(log);
  }

  model::save_checkpoint(result.checkpoint, net, metadata);
  result.train_report = evaluate(scorer, train_set);
  result.eval_report = evaluate(scorer, eval_set);

  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : result.epochs) {
    auto j = breakdown_json(e.mean);
    j["epoch"] = e.epoch;
    if (e.validation_micro_f) j["validation_micro_f"] = *e.validation_micro_f;
    epochs.push_back(j);
  }
  result.manifest = {
      {"format", "ssed-run"},
      {"code_version", code_version()},
      {"config", to_json(config)},
      {"network", model::to_json(net_config)},
      {"parameter_count", net.parameter_count()},
      {"decoder", strides_json(net)},
      {"clips", {{"train", train_set.size()}, {"validation", validation_set.size()}, {"eval", eval_set.size()}}},
      {"epochs", epochs},
      {"train_report", eval::to_json(result.train_report)},
      {"final_report", eval::to_json(result.eval_report)},
      {"checkpoint", result.checkpoint.string()},
      {"best_checkpoint", result.best_checkpoint ? nlohmann::json(result.best_checkpoint->string()) : nullptr},
      {"wall_clock_seconds",
       std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()},
  };
  write_file_atomic(config.output_dir / "manifest.json", result.manifest.dump(2) + "\n");
  return result;
}

}  // namespace ssed::trainer
