#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ssed/dataset.hpp"
#include "ssed/evaluation.hpp"
#include "ssed/model.hpp"
#include "ssed/objective.hpp"
#include "ssed/scene.hpp"

namespace ssed::trainer {

// "none", "onehot" or "table:<path>".
struct Representation {
  scene::SceneMode mode = scene::SceneMode::none;
  std::filesystem::path table;  // embedding mode only

  std::string str() const;
  friend bool operator==(const Representation&, const Representation&) = default;
};

Representation parse_representation(const std::string& text);

// Which clips of the corpus a run trains and scores on.
enum class Split { hash, all };

struct ExperimentConfig {
  std::filesystem::path corpus;  // directory with meta.tsv, annotations/, vocab.txt
  Representation representation;
  model::Fusion fusion = model::Fusion::none;
  objective::LossWeights weights;
  double lr = 1e-3;
  std::size_t batch_size = 8;
  std::size_t epochs = 100;
  std::uint64_t seed = 0;
  double threshold = 0.5;
  std::filesystem::path output_dir = "runs/default";
  // Architecture. n_events, frames, n_mels, fusion and context_dim are
  // filled in from the corpus and the scene representation.
  model::NetworkConfig model;
  double clip_seconds = 10.0;
  // hash: 80/20 train/eval split on the clip id. all: train and score on
  // every clip (memorization checks).
  Split split = Split::hash;
  // Hold out a fifth of the training clips; keep the best-micro-F checkpoint.
  bool validation = false;
  bool mask_padding = false;
  bool normalize_features = false;
  // Worker threads for run_matrix. Single runs are sequential.
  std::size_t jobs = 1;

  // Throws config_error. Does not touch the file system.
  void validate() const;
};

/// Keys mirror the struct fields; "alpha" and "beta" are the loss weights
/// and "model" takes the keys of model::network_config_from_json. Absent
/// keys keep their defaults and unknown keys are errors. Relative corpus,
/// table and output paths resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& c);

/// Small architecture for single-core experiments on 2 s clips: same
/// topology as the defaults, narrower layers.
model::NetworkConfig desk_network_config();

std::string code_version();

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  objective::LossBreakdown mean;  // averaged over the epoch's training clips
  std::optional<double> validation_micro_f;
};

struct RunResult {
  std::filesystem::path checkpoint;  // output_dir/checkpoint
  std::optional<std::filesystem::path> best_checkpoint;
  std::vector<EpochLog> epochs;
  eval::ScoreReport train_report;
  eval::ScoreReport eval_report;  // evaluation split, or every clip for Split::all
  nlohmann::json manifest;        // as written to output_dir/manifest.json
};

/// Full run: load, fail-fast checks, training on the total loss with one
/// AdaBelief step per batch, checkpoint, scoring, manifest.
RunResult train(const ExperimentConfig& config);

// Resolves scene labels to network context vectors for one checkpoint.
class ContextResolver {
 public:
  ContextResolver() = default;
  ContextResolver(scene::SceneMode mode, scene::OneHotCodebook codebook, std::optional<scene::EmbeddingTable> table);

  scene::SceneMode mode() const { return mode_; }
  const scene::OneHotCodebook& codebook() const { return codebook_; }
  const std::optional<scene::EmbeddingTable>& table() const { return table_; }
  std::size_t dim() const;

  // Undefined tensor in mode none. Errors: unseen_scene, absent_label.
  Tensor resolve(const std::string& label) const;

 private:
  scene::SceneMode mode_ = scene::SceneMode::none;
  scene::OneHotCodebook codebook_;
  std::optional<scene::EmbeddingTable> table_;
};

// Overrides for where scene context comes from at evaluation time.
struct ContextSource {
  // Use this label for every clip instead of the clip's own scene.
  std::optional<std::string> label;
  // Embedding table to use instead of the one recorded in the checkpoint.
  std::optional<std::filesystem::path> table;
  // Feed no context. Valid only for checkpoints trained without context.
  bool none = false;
};

struct Trained {
  model::Network network;
  ContextResolver context;
  data::EventVocabulary vocabulary;
  double threshold = 0.5;
  double clip_seconds = 10.0;
  bool normalize_features = false;
  nlohmann::json metadata;
};

Trained load_trained(const std::filesystem::path& checkpoint, const ContextSource& source = {});

enum class ClipSelection { all, train, eval };

eval::ScoreReport evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& corpus,
                           const ContextSource& source = {}, ClipSelection clips = ClipSelection::all);
// In-memory variant used by train().
eval::ScoreReport evaluate(const Trained& trained, const std::vector<data::Example>& examples,
                           const ContextSource& source = {});

struct Inference {
  std::string clip_id;
  std::string context_label;
  std::vector<std::string> events;
  std::size_t frames = 0;
  std::vector<double> activations;     // sigmoid(y), events x frames
  std::vector<std::uint8_t> decisions;  // events x frames
};

nlohmann::json to_json(const Inference& inference);

/// Runs one clip with an arbitrary context label, which may be absent from
/// training as long as the representation can encode it.
Inference infer(const Trained& trained, const data::Example& clip, const std::string& context_label);
Inference infer_unseen(const std::filesystem::path& checkpoint, const std::filesystem::path& corpus,
                       const std::string& clip_id, const std::string& context_label,
                       const std::optional<std::filesystem::path>& table = std::nullopt);

struct Variant {
  std::string name;
  Representation representation;
  model::Fusion fusion = model::Fusion::none;
};

std::vector<Variant> variants_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

struct MatrixRow {
  Variant variant;
  std::vector<double> micro_f;  // one per seed
  std::vector<double> macro_f;
  double micro_mean = 0.0, micro_std = 0.0;
  double macro_mean = 0.0, macro_std = 0.0;
};

// Sample mean and standard deviation (n - 1); std is 0 for a single value.
std::pair<double, double> mean_std(const std::vector<double>& values);

/// One train + evaluate per (variant, seed), seeds base.seed .. base.seed +
/// seeds - 1, each in output_dir/<variant>/seed_<s>. Runs execute on
/// base.jobs threads. Writes output_dir/matrix.tsv.
std::vector<MatrixRow> run_matrix(const ExperimentConfig& base, const std::vector<Variant>& variants,
                                  std::size_t seeds);
std::string matrix_tsv(const std::vector<MatrixRow>& rows);

enum class EmbeddingSpace { bottleneck, shared };

struct PlotOptions {
  // bottleneck: l and z (needs latent == encoder_channels). shared: l' and z'.
  EmbeddingSpace space = EmbeddingSpace::bottleneck;
  bool scenes = true;
  bool clips = true;
};

struct PlotResult {
  std::vector<eval::PlotPoint> points;
  std::vector<std::vector<double>> raw;  // vectors before PCA, same order
  std::vector<std::vector<double>> distances;
};

/// l for every scene the checkpoint's representation knows (table labels or
/// codebook) and z for every corpus clip. Writes embedding_points.csv,
/// embedding_distances.tsv (raw-vector distances) and embedding_plot.svg
/// into out_dir. Aligned checkpoints only.
PlotResult emit_embedding_plot(const std::filesystem::path& checkpoint, const std::filesystem::path& corpus,
                               const std::optional<std::filesystem::path>& table,
                               const std::filesystem::path& out_dir, const PlotOptions& options = {});

// Write-temp-then-rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace ssed::trainer
