#include "internal.hpp"
#include "ssed/error.hpp"

namespace ssed::trainer {

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

PlotResult emit_embedding_plot(const std::filesystem::path& checkpoint, const std::filesystem::path& corpus,
                               const std::optional<std::filesystem::path>& table,
                               const std::filesystem::path& out_dir, const PlotOptions& options) {
  ContextSource source;
  source.table = table;
  auto trained = load_trained(checkpoint, source);
  const auto& net = trained.network;
  if (!net.aligned())
    fail(Errc::config_error, "embedding plots need an aligned-fusion checkpoint (this one uses " +
                                 model::fusion_name(net.config().sed.fusion) + ")");
  const bool shared = options.space == EmbeddingSpace::shared;
  if (!shared && net.config().align.latent != net.config().align.encoder_channels) {
    fail(Errc::config_error, "l has " + std::to_string(net.config().align.latent) + " components and z has " +
                                 std::to_string(net.config().align.encoder_channels) +
                                 "; a joint bottleneck plot needs equal sizes (use the shared space)");
  }
  if (!options.scenes && !options.clips) fail(Errc::config_error, "nothing selected to plot");

  PlotResult out;
  NoGradGuard no_grad;
  if (options.scenes) {
    const auto labels = trained.context.mode() == scene::SceneMode::embedding ? trained.context.table()->labels()
                                                                               : trained.context.codebook().labels();
    for (const auto& label : labels) {
      auto l = net.project_context(trained.context.resolve(label));
      out.raw.push_back(values(shared ? net.to_shared(l) : l));
      out.points.push_back({label, "scene", 0.0, 0.0});
    }
  }
  if (options.clips) {
    auto c = detail::load_corpus_with_vocabulary(corpus, trained.vocabulary);
    auto examples = detail::load_examples(c, {trained.clip_seconds, trained.normalize_features}, net.config());
    for (const auto& ex : examples) {
      auto z = net.encode_bottleneck(net.cnn(ex.features));
      out.raw.push_back(values(shared ? net.to_shared_acoustic(z) : z));
      out.points.push_back({ex.clip_id + " [" + ex.scene_label + "]", "clip", 0.0, 0.0});
    }
  }

  auto pca = eval::pca_2d(out.raw);
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    out.points[i].x = pca.points[i][0];
    out.points[i].y = pca.points[i][1];
  }
  out.distances = eval::pairwise_distances(out.raw);

  std::vector<std::string> labels;
  for (const auto& p : out.points) labels.push_back(p.label);
  const std::string space = shared ? "shared space (l', z')" : "bottleneck space (l, z)";
  write_file_atomic(out_dir / "embedding_points.csv", eval::plot_csv(out.points));
  write_file_atomic(out_dir / "embedding_distances.tsv", eval::distance_tsv(labels, out.distances));
  write_file_atomic(out_dir / "embedding_plot.svg", eval::plot_svg(out.points, "PCA of " + space));
  return out;
}

}  // namespace ssed::trainer
