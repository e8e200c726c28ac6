// Command-line front end: train, eval, infer, matrix, plot-embeddings and
// corpus/table generators. Failures print one line "error: <code>: <message>"
// on stderr and exit nonzero.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssed/dataset.hpp"
#include "ssed/error.hpp"
#include "ssed/scene.hpp"
#include "ssed/trainer.hpp"

namespace fs = std::filesystem;
using namespace ssed;

namespace {

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

int report_error(std::string_view code, const std::string& message) {
  std::cerr << "error: " << code << ": " << one_line(message) << "\n";
  return 1;
}

void emit(const nlohmann::json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    trainer::write_file_atomic(out, j.dump(2) + "\n");
  }
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!scene::normalize_label(item).empty()) out.push_back(item);
  }
  return out;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::config_error, path.string() + ": " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-informed sound event detection"};
  app.require_subcommand(1);

  // train
  std::string config_path, output_dir;
  auto* train = app.add_subcommand("train", "Train one model from an experiment config");
  train->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--output-dir", output_dir, "Override output_dir");

  // eval
  std::string ckpt, corpus, context_label, table, split = "all", out;
  bool no_context = false;
  auto* evalc = app.add_subcommand("eval", "Score a checkpoint on a corpus");
  evalc->add_option("--ckpt", ckpt, "Checkpoint directory")->required();
  evalc->add_option("--corpus", corpus, "Corpus directory")->required();
  evalc->add_option("--context-label", context_label, "Use this scene label for every clip");
  evalc->add_option("--table", table, "Embedding table overriding the checkpoint's");
  evalc->add_flag("--no-context", no_context, "Feed no scene context (context-free checkpoints only)");
  evalc->add_option("--split", split, "Clips to score: all, train or eval")
      ->check(CLI::IsMember({"all", "train", "eval"}));
  evalc->add_option("--out", out, "Write the report here instead of stdout");

  // infer
  std::string clip_id;
  auto* infer = app.add_subcommand("infer", "Frame activations for one clip under any context label");
  infer->add_option("--ckpt", ckpt, "Checkpoint directory")->required();
  infer->add_option("--clip", clip_id, "Clip id")->required();
  infer->add_option("--context-label", context_label, "Scene label, seen in training or not")->required();
  infer->add_option("--table", table, "Embedding table overriding the checkpoint's");
  infer->add_option("--corpus", corpus, "Corpus holding the clip (default: the training corpus)");
  infer->add_option("--out", out, "Write JSON here instead of stdout");

  // matrix
  std::size_t seeds = 5, jobs = 0;
  auto* matrix = app.add_subcommand("matrix", "Train and score every variant over several seeds");
  matrix->add_option("--config", config_path, "Experiment config with a \"variants\" array")
      ->required()
      ->check(CLI::ExistingFile);
  matrix->add_option("--seeds", seeds, "Seeds per variant")->check(CLI::PositiveNumber);
  matrix->add_option("--jobs", jobs, "Parallel runs (default: config jobs)");
  matrix->add_option("--output-dir", output_dir, "Override output_dir");

  // plot-embeddings
  std::string space = "bottleneck", points = "all";
  auto* plot = app.add_subcommand("plot-embeddings", "PCA of scene and clip embeddings");
  plot->add_option("--ckpt", ckpt, "Aligned checkpoint directory")->required();
  plot->add_option("--corpus", corpus, "Corpus directory")->required();
  plot->add_option("--table", table, "Embedding table overriding the checkpoint's");
  plot->add_option("--out", out, "Output directory (default: <ckpt>/../plot)");
  plot->add_option("--space", space, "bottleneck (l, z) or shared (l', z')")
      ->check(CLI::IsMember({"bottleneck", "shared"}));
  plot->add_option("--points", points, "all, scenes or clips")->check(CLI::IsMember({"all", "scenes", "clips"}));

  // make-synthetic
  std::uint64_t seed = 0;
  std::size_t n_clips = 200;
  double clip_seconds = 10.0;
  bool wav = false;
  auto* synth = app.add_subcommand("make-synthetic", "Write a seeded two-scene synthetic corpus");
  synth->add_option("--seed", seed, "Seed")->required();
  synth->add_option("--out", out, "Output directory")->required();
  synth->add_option("--clips", n_clips, "Number of clips")->check(CLI::PositiveNumber);
  synth->add_option("--clip-seconds", clip_seconds, "Clip length in seconds")->check(CLI::PositiveNumber);
  synth->add_flag("--wav", wav, "Render sine-tone WAV files instead of feature caches");

  // make-fixture-table
  std::string labels;
  std::size_t dim = 32;
  auto* fixture = app.add_subcommand("make-fixture-table", "Write a seeded pseudo-embedding table");
  fixture->add_option("--out", out, "Output TSV")->required();
  fixture->add_option("--labels", labels, "Comma-separated labels (default: the fixture scene set)");
  fixture->add_option("--dim", dim, "Vector length")->check(CLI::PositiveNumber);
  fixture->add_option("--seed", seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << "\n";
    return 2;
  }

  try {
    if (*train) {
      auto config = trainer::load_experiment_config(config_path);
      if (!output_dir.empty()) config.output_dir = output_dir;
      auto result = trainer::train(config);
      std::cout << nlohmann::json{{"manifest", (config.output_dir / "manifest.json").string()},
                                  {"checkpoint", result.checkpoint.string()},
                                  {"eval_micro_f", result.eval_report.micro_f},
                                  {"eval_macro_f", result.eval_report.macro_f}}
                       .dump()
                << "\n";
    } else if (*evalc) {
      trainer::ContextSource source;
      if (!context_label.empty()) source.label = context_label;
      if (!table.empty()) source.table = table;
      source.none = no_context;
      auto selection = split == "train"  ? trainer::ClipSelection::train
                       : split == "eval" ? trainer::ClipSelection::eval
                                         : trainer::ClipSelection::all;
      emit(eval::to_json(trainer::evaluate(ckpt, corpus, source, selection)), out);
    } else if (*infer) {
      std::optional<fs::path> t;
      if (!table.empty()) t = table;
      if (corpus.empty()) corpus = trainer::load_trained(ckpt, {std::nullopt, t, false}).metadata.at("corpus");
      emit(trainer::to_json(trainer::infer_unseen(ckpt, corpus, clip_id, context_label, t)), out);
    } else if (*matrix) {
      auto config = trainer::load_experiment_config(config_path);
      if (!output_dir.empty()) config.output_dir = output_dir;
      if (jobs > 0) config.jobs = jobs;
      const auto j = read_json(config_path);
      std::vector<trainer::Variant> variants;
      if (j.contains("variants")) {
        variants = trainer::variants_from_json(j.at("variants"), fs::path(config_path).parent_path());
      } else {
        variants.push_back({"", config.representation, config.fusion});
        variants.front().name = config.representation.mode == scene::SceneMode::none
                                    ? "baseline"
                                    : model::fusion_name(config.fusion);
      }
      auto rows = trainer::run_matrix(config, variants, seeds);
      std::cout << trainer::matrix_tsv(rows);
    } else if (*plot) {
      std::optional<fs::path> t;
      if (!table.empty()) t = table;
      trainer::PlotOptions options;
      options.space = space == "shared" ? trainer::EmbeddingSpace::shared : trainer::EmbeddingSpace::bottleneck;
      options.scenes = points != "clips";
      options.clips = points != "scenes";
      const fs::path dir = out.empty() ? fs::path(ckpt).parent_path() / "plot" : fs::path(out);
      auto result = trainer::emit_embedding_plot(ckpt, corpus, t, dir, options);
      std::cout << nlohmann::json{{"out_dir", dir.string()}, {"points", result.points.size()}}.dump() << "\n";
    } else if (*synth) {
      auto options = data::default_synthetic_options(seed, n_clips, clip_seconds);
      options.wav = wav;
      data::make_synthetic_corpus(options, out);
      std::cout << nlohmann::json{{"corpus", out}, {"clips", n_clips}}.dump() << "\n";
    } else if (*fixture) {
      auto list = labels.empty() ? scene::default_fixture_labels() : split_commas(labels);
      scene::write_table(out, scene::make_fixture_table(list, dim, seed));
      std::cout << nlohmann::json{{"table", out}, {"labels", list.size()}, {"dim", dim}}.dump() << "\n";
    }
  } catch (const Error& e) {
    return report_error(errc_name(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return report_error("config_error", e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error("io_error", e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}
