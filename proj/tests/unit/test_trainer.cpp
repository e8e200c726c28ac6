#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "ssed/ops.hpp"
#include "ssed/trainer.hpp"
#include "expect_error.hpp"
#include "temp_dir.hpp"

using namespace ssed;
using namespace ssed::trainer;
using ssed::testing::error_code_of;
using ssed::testing::expect_error;
using ssed::testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Every file under a directory, keyed by relative path.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
  return out;
}

// 0.4 s clips (20 frames) and a network small enough for many runs per test.
ExperimentConfig tiny(const fs::path& corpus, const fs::path& out) {
  ExperimentConfig c;
  c.corpus = corpus;
  c.output_dir = out;
  c.clip_seconds = 0.4;
  c.split = Split::all;
  c.epochs = 3;
  c.batch_size = 2;
  c.lr = 0.1;
  auto& m = c.model;
  m.sed.cnn_channels = {3, 3, 3};
  m.sed.freq_pool = {2, 2, 2};
  m.sed.gru_units = 3;
  m.sed.ffn_units = {5, 4};
  m.align.projection_hidden = 6;
  m.align.latent = 4;
  m.align.encoder_channels = 4;
  m.align.shared = 3;
  m.align.time_pool = 5;
  m.align.decoder_channels = {3, 2, 2};
  return c;
}

struct Fixture {
  TempDir dir;
  fs::path corpus = dir / "corpus";
  fs::path table = dir / "table.tsv";
  explicit Fixture(std::size_t clips = 6) {
    data::make_synthetic_corpus(data::default_synthetic_options(3, clips, 0.4), corpus);
    scene::write_table(table, scene::make_fixture_table(scene::default_fixture_labels(), 5, 1));
  }
  ExperimentConfig config(const std::string& name, model::Fusion fusion = model::Fusion::none,
                          const std::string& rep = "none") const {
    auto c = tiny(corpus, dir / name);
    c.fusion = fusion;
    c.representation = parse_representation(rep == "table" ? "table:" + table.string() : rep);
    return c;
  }
};

}  // namespace

TEST_CASE("representation and experiment config parsing") {
  CHECK(parse_representation("none").mode == scene::SceneMode::none);
  CHECK(parse_representation("onehot").str() == "onehot");
  auto t = parse_representation("table:embeddings/bert.tsv");
  CHECK(t.mode == scene::SceneMode::embedding);
  CHECK(t.table == "embeddings/bert.tsv");
  CHECK(parse_representation(t.str()) == t);
  CHECK(error_code_of([] { parse_representation("table:"); }) == Errc::config_error);
  CHECK(error_code_of([] { parse_representation("bert"); }) == Errc::config_error);

  auto c = experiment_config_from_json(
      {{"corpus", "data"},
       {"representation", "table:t.tsv"},
       {"fusion", "aligned"},
       {"alpha", 0.5},
       {"model", {{"preset", "desk"}, {"gru_units", 7}}},
       {"variants", nlohmann::json::array()}},
      "/base");
  CHECK(c.corpus == "/base/data");
  CHECK(c.representation.table == "/base/t.tsv");
  CHECK(c.weights.alpha == 0.5);
  CHECK(c.weights.beta == 1.0);
  CHECK(c.lr == 1e-3);
  CHECK(c.batch_size == 8);
  CHECK(c.epochs == 100);
  CHECK(c.model.sed.gru_units == 7);
  CHECK(c.model.sed.cnn_channels == desk_network_config().sed.cnn_channels);
  CHECK(experiment_config_from_json(to_json(c)).model.sed.gru_units == 7);
  CHECK(to_json(experiment_config_from_json(to_json(c))) == to_json(c));

  auto err = [](nlohmann::json j) { return error_code_of([&] { experiment_config_from_json(j); }); };
  CHECK(err({{"corpus", "d"}, {"epochz", 3}}) == Errc::config_error);
  CHECK(err({{"corpus", "d"}, {"fusion", "aligned"}}) == Errc::config_error);
  CHECK(err({{"corpus", "d"}, {"representation", "onehot"}}) == Errc::config_error);
  CHECK(err({{"corpus", "d"}, {"alpha", -1.0}}) == Errc::config_error);
  CHECK(err({{"corpus", "d"}, {"batch_size", 0}}) == Errc::config_error);
  CHECK(err({{"corpus", "d"}, {"epochs", "many"}}) == Errc::config_error);
  CHECK(err({{"corpus", "d"}, {"model", {{"layers", 3}}}}) == Errc::config_error);
  CHECK(err({{"corpus", "d"}, {"model", "huge"}}) == Errc::config_error);
  CHECK(err({{"epochs", 3}}) == Errc::config_error);

  auto v = variants_from_json({{{"representation", "onehot"}, {"fusion", "direct"}},
                               {{"name", "emb aligned"}, {"representation", "table:x.tsv"}, {"fusion", "aligned"}}},
                              "/cfg");
  REQUIRE(v.size() == 2);
  CHECK(v[0].name == "onehot+direct");
  CHECK(v[1].name == "emb_aligned");
  CHECK(v[1].representation.table == "/cfg/x.tsv");
  CHECK(error_code_of([] { variants_from_json(nlohmann::json::array()); }) == Errc::config_error);
}

TEST_CASE("mean_std and the matrix table") {
  auto [m, s] = mean_std({1.0, 2.0, 3.0});
  CHECK(m == 2.0);
  CHECK(s == 1.0);
  auto [m1, s1] = mean_std({0.25});
  CHECK(m1 == 0.25);
  CHECK(s1 == 0.0);
  // Sample (n - 1) standard deviation against a direct formula.
  std::vector<double> x{0.5, 0.55, 0.61};
  const double mu = (0.5 + 0.55 + 0.61) / 3;
  const double sd = std::sqrt(((0.5 - mu) * (0.5 - mu) + (0.55 - mu) * (0.55 - mu) + (0.61 - mu) * (0.61 - mu)) / 2);
  CHECK(mean_std(x).first == doctest::Approx(mu).epsilon(1e-15));
  CHECK(mean_std(x).second == doctest::Approx(sd).epsilon(1e-14));

  MatrixRow row;
  row.variant = {"baseline", {}, model::Fusion::none};
  row.micro_f = {0.5};
  row.macro_f = {0.25};
  row.micro_mean = 0.5;
  row.macro_mean = 0.25;
  auto tsv = matrix_tsv({row});
  CHECK(tsv.find("baseline\tnone\tnone\t1\t50.0000\t0.0000\t25.0000\t0.0000\n") != std::string::npos);
}

TEST_CASE("train: zero epochs, determinism, manifest") {
  Fixture f;
  SUBCASE("epochs = 0 saves the initial parameters and an empty log") {
    auto c = f.config("e0");
    c.epochs = 0;
    auto r = train(c);
    CHECK(r.epochs.empty());
    CHECK(r.manifest["epochs"].empty());
    auto loaded = model::load_checkpoint(r.checkpoint);
    model::Network fresh(loaded.network.config(), c.seed);
    for (const auto& p : fresh.parameters()) {
      const auto& q = loaded.network.parameter(p.name);
      CHECK(std::equal(p.tensor.data().begin(), p.tensor.data().end(), q.data().begin()));
    }
  }
  SUBCASE("same seed twice gives identical checkpoints and manifests") {
    auto c = f.config("det", model::Fusion::aligned, "table");
    auto first = train(c);
    auto files = tree(c.output_dir / "checkpoint");
    auto manifest = first.manifest;
    auto second = train(c);
    CHECK(tree(c.output_dir / "checkpoint") == files);
    manifest.erase("wall_clock_seconds");
    auto again = nlohmann::json::parse(slurp(c.output_dir / "manifest.json"));
    CHECK(again.contains("wall_clock_seconds"));
    again.erase("wall_clock_seconds");
    CHECK(again == manifest);
    CHECK(!fs::exists(c.output_dir / "manifest.json.tmp"));

    CHECK(again["epochs"].size() == 3);
    CHECK(again["config"]["fusion"] == "aligned");
    CHECK(again["decoder"]["strides"].size() == 3);
    CHECK(again["code_version"] == code_version());
    CHECK(again["final_report"]["classes"].size() == 7);
    const auto& e1 = again["epochs"][0];
    // Epoch means of a linear combination.
    CHECK(e1["total"].get<double>() ==
          doctest::Approx(objective::total_loss(e1["l_sed"], e1["l_ae"], e1["l_align"], c.weights, true).total)
              .epsilon(1e-12));
  }
  SUBCASE("a different seed changes the run") {
    auto a = f.config("s0");
    auto b = f.config("s1");
    b.seed = 1;
    CHECK(train(a).epochs.back().mean.l_sed != train(b).epochs.back().mean.l_sed);
  }
}

TEST_CASE("train fails fast") {
  Fixture f;
  SUBCASE("table without a training scene") {
    auto small = f.dir / "small.tsv";
    scene::write_table(small, scene::make_fixture_table({"home", "office"}, 5, 1));
    auto c = f.config("ff", model::Fusion::aligned, "table");
    c.representation.table = small;
    auto e = expect_error([&] { train(c); });
    CHECK(e.code() == Errc::absent_label);
    CHECK(std::string(e.what()).find("city center") != std::string::npos);
    CHECK(!fs::exists(c.output_dir / "checkpoint"));
  }
  SUBCASE("missing table file") {
    auto c = f.config("ff2", model::Fusion::direct, "table");
    c.representation.table = f.dir / "nope.tsv";
    CHECK(error_code_of([&] { train(c); }) == Errc::io_error);
  }
  SUBCASE("feature length disagrees with clip_seconds") {
    auto c = f.config("ff3");
    c.clip_seconds = 1.0;
    CHECK(error_code_of([&] { train(c); }) == Errc::config_error);
  }
  SUBCASE("empty corpus directory") {
    auto c = f.config("ff4");
    c.corpus = f.dir / "missing";
    CHECK_THROWS_AS(train(c), Error);
  }
}

TEST_CASE("evaluate and infer") {
  Fixture f;
  auto none_cfg = f.config("none");
  auto none_run = train(none_cfg);
  auto aligned_cfg = f.config("aligned", model::Fusion::aligned, "table");
  auto aligned_run = train(aligned_cfg);
  auto onehot_cfg = f.config("onehot", model::Fusion::direct, "onehot");
  auto onehot_run = train(onehot_cfg);

  SUBCASE("checkpoint path reproduces the run's report") {
    auto r = evaluate(aligned_run.checkpoint, f.corpus);
    CHECK(eval::to_json(r) == eval::to_json(aligned_run.eval_report));
    CHECK(eval::to_json(evaluate(none_run.checkpoint, f.corpus)) == eval::to_json(none_run.eval_report));
  }
  SUBCASE("context none on a none checkpoint matches the default path") {
    ContextSource none;
    none.none = true;
    CHECK(eval::to_json(evaluate(none_run.checkpoint, f.corpus, none)) ==
          eval::to_json(evaluate(none_run.checkpoint, f.corpus)));
    CHECK(error_code_of([&] { evaluate(aligned_run.checkpoint, f.corpus, none); }) == Errc::config_error);
  }
  SUBCASE("onehot rejects unseen scenes, embeddings accept them") {
    ContextSource unseen;
    unseen.label = "downtown";
    auto e = expect_error([&] { evaluate(onehot_run.checkpoint, f.corpus, unseen); });
    CHECK(e.code() == Errc::unseen_scene);
    CHECK(std::string(e.what()).find("one-hot mode cannot encode unseen scenes") != std::string::npos);
    auto r = evaluate(aligned_run.checkpoint, f.corpus, unseen);
    CHECK(r.classes.size() == 7);
    unseen.label = "mars base";
    CHECK(error_code_of([&] { evaluate(aligned_run.checkpoint, f.corpus, unseen); }) == Errc::absent_label);
  }
  SUBCASE("infer with a training scene matches the evaluation path") {
    auto trained = load_trained(aligned_run.checkpoint);
    auto corpus = data::load_corpus_dir(f.corpus);
    auto examples = data::materialize(corpus, {0.4});
    const auto& ex = examples.front();
    auto inf = infer(trained, ex, ex.scene_label);
    NoGradGuard ng;
    auto logits = trained.network.forward(ex.features, trained.context.resolve(ex.scene_label)).logits;
    CHECK(inf.decisions == model::predict_events(logits.data(), 0.5));
    CHECK(inf.activations.size() == 7 * 20);
    auto via_disk = infer_unseen(aligned_run.checkpoint, f.corpus, ex.clip_id, ex.scene_label);
    CHECK(via_disk.activations == inf.activations);
  }
  SUBCASE("synonym contexts run, and different labels give different activations") {
    const auto clip = data::load_corpus_dir(f.corpus).clips.front().clip_id;
    auto a = infer_unseen(aligned_run.checkpoint, f.corpus, clip, "downtown");
    auto b = infer_unseen(aligned_run.checkpoint, f.corpus, clip, "apartment");
    CHECK(a.decisions.size() == 7 * 20);
    CHECK(a.activations != b.activations);
    auto j = to_json(a);
    CHECK(j["events"].size() == 7);
    CHECK(j["context_label"] == "downtown");
    CHECK(error_code_of([&] { infer_unseen(onehot_run.checkpoint, f.corpus, clip, "downtown"); }) ==
          Errc::unseen_scene);
    CHECK(error_code_of([&] { infer_unseen(aligned_run.checkpoint, f.corpus, clip, "mars base"); }) ==
          Errc::absent_label);
    CHECK(error_code_of([&] { infer_unseen(aligned_run.checkpoint, f.corpus, "no_such_clip", "home"); }) ==
          Errc::invalid_argument);
  }
  SUBCASE("table override with the wrong dimension") {
    auto wide = f.dir / "wide.tsv";
    scene::write_table(wide, scene::make_fixture_table(scene::default_fixture_labels(), 9, 1));
    ContextSource s;
    s.table = wide;
    CHECK(error_code_of([&] { evaluate(aligned_run.checkpoint, f.corpus, s); }) == Errc::config_error);
  }
}

TEST_CASE("validation split keeps the best checkpoint") {
  Fixture f(20);
  auto c = f.config("val");
  c.split = Split::hash;
  c.validation = true;
  auto r = train(c);
  REQUIRE(r.best_checkpoint);
  CHECK(fs::exists(*r.best_checkpoint / "manifest.json"));
  for (const auto& e : r.epochs) CHECK(e.validation_micro_f.has_value());
  const auto clips = r.manifest["clips"];
  CHECK(clips["train"].get<int>() + clips["validation"].get<int>() + clips["eval"].get<int>() == 20);
  CHECK(clips["validation"].get<int>() > 0);
}

TEST_CASE("embedding plot") {
  Fixture f(2);
  auto two = f.dir / "two.tsv";
  scene::write_table(two, scene::make_fixture_table({"home", "city center"}, 5, 1));
  auto c = f.config("plot", model::Fusion::aligned, "table");
  c.representation.table = two;
  auto run = train(c);

  SUBCASE("two labels and two clips give four points; reruns are byte-identical") {
    auto out = f.dir / "plot_out";
    auto r = emit_embedding_plot(run.checkpoint, f.corpus, std::nullopt, out);
    CHECK(r.points.size() == 4);
    auto csv = slurp(out / "embedding_points.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(r.distances == eval::pairwise_distances(r.raw));
    auto files = tree(out);
    CHECK(files.size() == 3);
    emit_embedding_plot(run.checkpoint, f.corpus, std::nullopt, out);
    CHECK(tree(out) == files);
  }
  SUBCASE("three points are rank 2, so PCA preserves the emitted distances") {
    auto one = f.dir / "one";
    data::Corpus full = data::load_corpus_dir(f.corpus);
    fs::create_directories(one / "annotations");
    {
      std::ofstream meta(one / "meta.tsv");
      meta << full.clips[0].clip_id << "\t" << fs::absolute(full.clips[0].source).string() << "\t"
           << full.clips[0].scene_label << "\n";
    }
    fs::copy_file(f.corpus / "annotations" / (full.clips[0].clip_id + ".ann"),
                  one / "annotations" / (full.clips[0].clip_id + ".ann"));
    auto r = emit_embedding_plot(run.checkpoint, one, std::nullopt, f.dir / "plot3");
    REQUIRE(r.points.size() == 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        CHECK(std::abs(std::hypot(r.points[i].x - r.points[j].x, r.points[i].y - r.points[j].y) -
                       r.distances[i][j]) < 1e-9);
  }
  SUBCASE("shared space and point selection") {
    PlotOptions o;
    o.space = EmbeddingSpace::shared;
    auto r = emit_embedding_plot(run.checkpoint, f.corpus, f.table, f.dir / "shared", o);
    CHECK(r.points.size() == scene::default_fixture_labels().size() + 2);
    CHECK(r.raw.front().size() == 3);
    o.clips = false;
    CHECK(emit_embedding_plot(run.checkpoint, f.corpus, f.table, f.dir / "s2", o).points.size() == 6);
  }
  SUBCASE("non-aligned checkpoints are rejected") {
    auto n = train(f.config("plot_none"));
    CHECK(error_code_of([&] { emit_embedding_plot(n.checkpoint, f.corpus, std::nullopt, f.dir / "x"); }) ==
          Errc::config_error);
  }
}

TEST_CASE("run_matrix") {
  Fixture f;
  auto base = f.config("matrix");
  base.epochs = 2;
  std::vector<Variant> variants{{"baseline", {}, model::Fusion::none},
                                {"aligned", parse_representation("table:" + f.table.string()), model::Fusion::aligned}};
  auto rows = run_matrix(base, variants, 3);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    REQUIRE(row.micro_f.size() == 3);
    CHECK(row.micro_mean == mean_std(row.micro_f).first);
    CHECK(row.micro_std == mean_std(row.micro_f).second);
  }
  CHECK(fs::exists(base.output_dir / "aligned" / "seed_2" / "manifest.json"));
  CHECK(slurp(base.output_dir / "matrix.tsv") == matrix_tsv(rows));

  // Threads do not change results.
  auto threaded = base;
  threaded.jobs = 3;
  threaded.output_dir = f.dir / "matrix_threads";
  auto rows2 = run_matrix(threaded, variants, 3);
  for (std::size_t v = 0; v < 2; ++v) CHECK(rows2[v].micro_f == rows[v].micro_f);

  std::vector<Variant> bad{{"bad", {}, model::Fusion::aligned}};
  CHECK(error_code_of([&] { run_matrix(base, bad, 1); }) == Errc::config_error);
}

TEST_CASE("shipped example configs parse") {
  const fs::path dir = SSED_CONFIG_DIR;
  auto overfit = load_experiment_config(dir / "desk_overfit.json");
  CHECK(overfit.split == Split::all);
  CHECK(overfit.batch_size == 1);
  CHECK(overfit.model.sed.gru_units == desk_network_config().sed.gru_units);

  auto full = load_experiment_config(dir / "full_default.json");
  CHECK(full.fusion == model::Fusion::aligned);
  CHECK(full.representation.table == dir / "../data/scene_embeddings.tsv");
  CHECK(full.model.sed.cnn_channels == std::vector<std::size_t>{128, 128, 128});

  const auto matrix_path = dir / "conditioning_matrix.json";
  auto base = load_experiment_config(matrix_path);
  std::ifstream in(matrix_path);
  auto variants = variants_from_json(nlohmann::json::parse(in).at("variants"), dir);
  REQUIRE(variants.size() == 4);
  CHECK(variants[0].name == "baseline");
  CHECK(variants[3].fusion == model::Fusion::aligned);
  CHECK(base.lr == 0.5);
}
