#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ssed/evaluation.hpp"
#include "ssed/rng.hpp"
#include "expect_error.hpp"

using namespace ssed;
using namespace ssed::eval;
using ssed::testing::error_code_of;

namespace {

using Grid = std::vector<std::uint8_t>;

Grid random_grid(Rng& rng, std::size_t cells, double p) {
  Grid g(cells);
  for (auto& v : g) v = rng.bernoulli(p) ? 1 : 0;
  return g;
}

// Brute-force reference: enumerate every cell and recompute F from scratch.
struct Oracle {
  std::vector<std::array<std::uint64_t, 3>> c;
  Oracle(const Grid& ref, const Grid& pred, std::size_t n, std::size_t t) : c(n, {0, 0, 0}) {
    for (std::size_t cell = 0; cell < n * t; ++cell) {
      const auto cls = cell / t;
      if (ref[cell] == 1 && pred[cell] == 1) ++c[cls][0];
      if (ref[cell] == 0 && pred[cell] == 1) ++c[cls][1];
      if (ref[cell] == 1 && pred[cell] == 0) ++c[cls][2];
    }
  }
  double micro() const {
    std::uint64_t tp = 0, fp = 0, fn = 0;
    for (auto& x : c) tp += x[0], fp += x[1], fn += x[2];
    return tp + fp + fn == 0 ? 0.0 : 2.0 * tp / (2.0 * tp + fp + fn);
  }
  double macro() const {
    double s = 0;
    for (auto& x : c) s += (x[0] + x[1] + x[2] == 0) ? 0.0 : 2.0 * x[0] / (2.0 * x[0] + x[1] + x[2]);
    return s / c.size();
  }
};

// Power iteration with deflation on the covariance, for the top two axes.
std::array<std::vector<double>, 2> power_axes(const std::vector<std::vector<double>>& v) {
  const std::size_t n = v.size(), d = v[0].size();
  std::vector<double> mean(d, 0.0);
  for (auto& x : v)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x[j] / n;
  std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
  for (auto& x : v)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov[i][j] += (x[i] - mean[i]) * (x[j] - mean[j]) / (n - 1);
  std::array<std::vector<double>, 2> out;
  for (int k = 0; k < 2; ++k) {
    std::vector<double> b(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) b[j] += 0.1 * j;
    double lambda = 0;
    for (int it = 0; it < 20000; ++it) {
      std::vector<double> nb(d, 0.0);
      for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) nb[i] += cov[i][j] * b[j];
      double norm = 0;
      for (double x : nb) norm += x * x;
      norm = std::sqrt(norm);
      for (auto& x : nb) x /= norm;
      lambda = norm;
      b = nb;
    }
    out[k] = b;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) cov[i][j] -= lambda * b[i] * b[j];
  }
  return out;
}

double dist(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  return std::hypot(a[0] - b[0], a[1] - b[1]);
}

}  // namespace

TEST_CASE("segment counts and F-scores") {
  Grid ref{1, 0, 1, 1}, pred = ref;
  auto c = segment_counts(ref, pred, 1, 4);
  CHECK(c.classes[0] == ClassCounts{3, 0, 0});
  CHECK(micro_f(c) == 1.0);
  CHECK(macro_f(c) == 1.0);

  auto swap = segment_counts(Grid{1, 0}, Grid{0, 1}, 1, 2);
  CHECK(swap.classes[0] == ClassCounts{0, 1, 1});

  SegmentCounts two(2);
  two.classes[0] = {1, 1, 1};
  CHECK(macro_f(two) == 0.25);
  CHECK(micro_f(two) == 0.5);

  SegmentCounts empty(3);
  CHECK(micro_f(empty) == 0.0);
  CHECK(macro_f(empty) == 0.0);
  CHECK(error_code_of([] { segment_counts(Grid{1, 0}, Grid{1}, 1, 2); }) == Errc::shape_mismatch);
}

TEST_CASE("metrics agree with a brute-force oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(6), t = 1 + rng.uniform_int(50);
    const double p = rng.uniform(0.0, 0.6);
    auto ref = random_grid(rng, n * t, p), pred = random_grid(rng, n * t, p);
    auto c = segment_counts(ref, pred, n, t);
    Oracle o(ref, pred, n, t);
    for (std::size_t k = 0; k < n; ++k) {
      REQUIRE(c.classes[k].tp == o.c[k][0]);
      REQUIRE(c.classes[k].fp == o.c[k][1]);
      REQUIRE(c.classes[k].fn == o.c[k][2]);
      // TP + FN = reference-active segments of the class.
      REQUIRE(c.classes[k].tp + c.classes[k].fn ==
              static_cast<std::uint64_t>(std::count(ref.begin() + k * t, ref.begin() + (k + 1) * t, 1)));
    }
    REQUIRE(micro_f(c) == o.micro());
    REQUIRE(macro_f(c) == o.macro());
  }
}

TEST_CASE("metric invariances") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.uniform_int(4), t = 10 + rng.uniform_int(20);
    auto ref = random_grid(rng, n * t, 0.3), pred = random_grid(rng, n * t, 0.3);
    auto base = segment_counts(ref, pred, n, t);

    // Permuting classes.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    Grid pr(n * t), pp(n * t);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t s = 0; s < t; ++s) {
        pr[perm[k] * t + s] = ref[k * t + s];
        pp[perm[k] * t + s] = pred[k * t + s];
      }
    auto permuted = segment_counts(pr, pp, n, t);
    CHECK(micro_f(permuted) == micro_f(base));
    CHECK(macro_f(permuted) == doctest::Approx(macro_f(base)).epsilon(1e-15));

    // An empty clip changes nothing.
    auto more = base;
    more.accumulate(Grid(n * 7, 0), Grid(n * 7, 0), 7);
    CHECK(micro_f(more) == micro_f(base));
    CHECK(macro_f(more) == macro_f(base));

    // Counts over disjoint clips add.
    auto ref2 = random_grid(rng, n * t, 0.3), pred2 = random_grid(rng, n * t, 0.3);
    auto joint = base;
    joint.accumulate(ref2, pred2, t);
    auto sum = base;
    sum.merge(segment_counts(ref2, pred2, n, t));
    CHECK(joint == sum);

    auto single = segment_counts(Grid(ref.begin(), ref.begin() + t), Grid(pred.begin(), pred.begin() + t), 1, t);
    CHECK(micro_f(single) == macro_f(single));
  }
}

TEST_CASE("score report") {
  SegmentCounts c(2);
  c.classes[0] = {3, 1, 2};
  auto r = score_report(c, {"car", "dog"});
  CHECK(r.classes[0].precision == 0.75);
  CHECK(r.classes[0].recall == 0.6);
  CHECK(r.classes[1].f == 0.0);
  auto j = to_json(r);
  CHECK(j["classes"][0]["label"] == "car");
  CHECK(j["micro_f"].get<double>() == r.micro_f);
  for (const auto& k : r.classes) {
    CHECK(k.f >= 0.0);
    CHECK(k.f <= 1.0);
  }
  CHECK_THROWS_AS(score_report(c, {"car"}), Error);
}

TEST_CASE("pca_2d") {
  Rng rng(3);
  SUBCASE("rank-2 data projects isometrically") {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t d = 3 + rng.uniform_int(20), n = 3 + rng.uniform_int(15);
      std::vector<double> u(d), w(d), o(d);
      for (auto* v : {&u, &w, &o})
        for (auto& x : *v) x = rng.normal();
      std::vector<std::vector<double>> pts;
      for (std::size_t i = 0; i < n; ++i) {
        const double a = rng.uniform(-5, 5), b = rng.uniform(-5, 5);
        std::vector<double> p(d);
        for (std::size_t j = 0; j < d; ++j) p[j] = o[j] + a * u[j] + b * w[j];
        pts.push_back(p);
      }
      auto r = pca_2d(pts);
      auto raw = pairwise_distances(pts);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) REQUIRE(std::abs(dist(r.points[i], r.points[j]) - raw[i][j]) < 1e-9);
      CHECK(r.explained[0] + r.explained[1] == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("identical points project to the origin") {
    auto r = pca_2d({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
    for (auto& p : r.points) {
      CHECK(p[0] == 0.0);
      CHECK(p[1] == 0.0);
    }
    CHECK(r.explained[0] == 0.0);
  }
  SUBCASE("matches power iteration up to sign") {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<std::vector<double>> pts(5, std::vector<double>(10));
      for (auto& p : pts)
        for (auto& x : p) x = rng.normal();
      auto r = pca_2d(pts);
      auto axes = power_axes(pts);
      for (int k = 0; k < 2; ++k) {
        double dot = 0;
        for (std::size_t j = 0; j < 10; ++j) dot += axes[k][j] * r.axes[k][j];
        const double sign = dot < 0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < 5; ++i) {
          double proj = 0;
          for (std::size_t j = 0; j < 10; ++j) proj += (pts[i][j] - r.mean[j]) * axes[k][j];
          REQUIRE(std::abs(sign * proj - r.points[i][k]) < 1e-6);
        }
        // Sign rule.
        auto first = std::find_if(r.axes[k].begin(), r.axes[k].end(), [](double v) { return std::abs(v) > 1e-12; });
        CHECK(*first > 0);
      }
      CHECK(r.explained[0] >= r.explained[1]);
      CHECK(r.explained[1] >= 0.0);
      CHECK(r.explained[0] + r.explained[1] <= 1.0 + 1e-12);
    }
  }
  SUBCASE("errors") {
    CHECK(error_code_of([] { pca_2d({{1, 2}, {3, 4}}); }) == Errc::invalid_argument);
    CHECK(error_code_of([] { pca_2d({{1}, {2}, {3}}); }) == Errc::invalid_argument);
    CHECK(error_code_of([] { pca_2d({{1, 2}, {3, 4}, {5}}); }) == Errc::shape_mismatch);
  }
}

TEST_CASE("pairwise distances") {
  auto d = pairwise_distances({{0, 0}, {3, 4}, {0, 0}});
  CHECK(d[0][1] == 5.0);
  CHECK(d[0][2] == 0.0);
  CHECK(d[1][1] == 0.0);
  CHECK(error_code_of([] { pairwise_distances({{0, 0}, {1}}); }) == Errc::shape_mismatch);
  Rng rng(4);
  std::vector<std::vector<double>> pts(12, std::vector<double>(4));
  for (auto& p : pts)
    for (auto& x : p) x = rng.normal();
  auto m = pairwise_distances(pts);
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) {
      CHECK(m[i][j] == m[j][i]);
      for (std::size_t k = 0; k < 12; ++k) CHECK(m[i][k] <= m[i][j] + m[j][k] + 1e-12);
    }
}

TEST_CASE("plot output is deterministic and well formed") {
  std::vector<PlotPoint> pts{{"home", "scene", 1.5, -2}, {"clip_0001", "clip", 0, 0}, {"a,b", "clip", -1, 3}};
  CHECK(plot_csv(pts) == plot_csv(pts));
  CHECK(plot_csv(pts).find("\"a,b\",clip,-1,3\n") != std::string::npos);
  auto svg = plot_svg(pts, "t <1>");
  CHECK(svg == plot_svg(pts, "t <1>"));
  CHECK(svg.find("t &lt;1&gt;") != std::string::npos);
  CHECK(std::count(svg.begin(), svg.end(), '\n') > 5);
  CHECK(svg.find(">home</text>") != std::string::npos);
  auto tsv = distance_tsv({"a", "b"}, {{0, 5}, {5, 0}});
  CHECK(tsv == "label\ta\tb\na\t0\t5\nb\t5\t0\n");
}
