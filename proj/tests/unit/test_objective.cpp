#include <doctest.h>

#include <cmath>

#include "ssed/objective.hpp"
#include "ssed/ops.hpp"
#include "ssed/rng.hpp"
#include "gradcheck.hpp"

using namespace ssed;
using namespace ssed::objective;
using ssed::testing::check_gradients;
using ssed::testing::random_tensor;

namespace {

// Textbook -(z log s + (1-z) log(1-s)). The complement is taken as
// sigmoid(-y): writing 1 - s literally cancels to ~1e-7 relative error
// near |y| = 20, which would swamp the comparison.
double naive_bce(double z, double y) {
  const double s = 1.0 / (1.0 + std::exp(-y));
  const double not_s = 1.0 / (1.0 + std::exp(y));
  return -(z * std::log(s) + (1.0 - z) * std::log(not_s));
}

Tensor binary(Rng& rng, Shape shape) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.bernoulli(0.4) ? 1.0 : 0.0;
  return Tensor::from_data(std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("loss_sed values") {
  CHECK(loss_sed(Tensor::full({1, 1}, 40.0), Tensor::full({1, 1}, 1.0)).item() < 1e-15);
  Rng rng(1);
  auto z = binary(rng, {3, 7});
  CHECK(std::abs(loss_sed(Tensor::zeros({3, 7}), z).item() - std::log(2.0)) <= 1e-12);

  auto y = Tensor::from_data({2, 1}, {0.5, -0.5});
  auto zz = Tensor::from_data({2, 1}, {1.0, 0.0});
  const double expected = 0.5 * (naive_bce(1.0, 0.5) + naive_bce(0.0, -0.5));
  CHECK(std::abs(loss_sed(y, zz).item() - expected) <= 1e-12);
  CHECK(std::abs(loss_sed(y, zz).item() - std::log1p(std::exp(-0.5))) <= 1e-15);

  CHECK_THROWS_AS(loss_sed(Tensor::zeros({2, 3}), Tensor::zeros({3, 2})), Error);
}

TEST_CASE("loss_sed stable form matches the naive form on |y| <= 20") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    auto y = random_tensor(rng, {4, 9}, 20.0, false);
    auto z = binary(rng, {4, 9});
    double naive = 0.0;
    for (std::size_t i = 0; i < 36; ++i) naive += naive_bce(z[i], y[i]);
    naive /= 36.0;
    REQUIRE(std::abs(loss_sed(y, z).item() - naive) <= 1e-12);
    REQUIRE(loss_sed(y, z).item() >= 0.0);
  }
  // Saturation regime where the naive form breaks down.
  auto big = Tensor::from_data({1, 2}, {800.0, -800.0});
  auto t = Tensor::from_data({1, 2}, {1.0, 0.0});
  CHECK(loss_sed(big, t).item() == 0.0);
  CHECK(std::isfinite(loss_sed(big, Tensor::from_data({1, 2}, {0.0, 1.0})).item()));
}

TEST_CASE("loss_sed padding mask") {
  auto y = Tensor::from_data({1, 4}, {0.0, 0.0, 5.0, 5.0});
  auto z = Tensor::from_data({1, 4}, {0.0, 0.0, 0.0, 0.0});
  CHECK(std::abs(loss_sed(y, z, 2).item() - std::log(2.0)) < 1e-15);
  CHECK(loss_sed(y, z, 2).item() < loss_sed(y, z).item());
  CHECK(loss_sed(y, z, 100).item() == loss_sed(y, z).item());
}

TEST_CASE("loss_ae and loss_align values") {
  Rng rng(3);
  auto x = random_tensor(rng, {5, 6}, 2.0, false);
  CHECK(loss_ae(x, x).item() == 0.0);
  CHECK(loss_ae(Tensor::from_data({1, 2}, {1, 1}), Tensor::zeros({1, 2})).item() == 1.0);
  auto xh = random_tensor(rng, {5, 6}, 2.0, false);
  double oracle = 0.0;
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t f = 0; f < 6; ++f) {
      const double d = x[t * 6 + f] - xh[t * 6 + f];
      oracle += d * d;
    }
  CHECK(std::abs(loss_ae(x, xh).item() - oracle / 30.0) <= 1e-12);
  CHECK_THROWS_AS(loss_ae(x, Tensor::zeros({6, 5})), Error);

  auto a = random_tensor(rng, {32}, 1.0, false);
  auto b = random_tensor(rng, {32}, 1.0, false);
  CHECK(loss_align(a, a).item() == 0.0);
  CHECK(loss_align(Tensor::from_data({2}, {1, 2}), Tensor::zeros({2})).item() == 1.5);
  CHECK(loss_align(a, b).item() == loss_align(b, a).item());
  CHECK_THROWS_AS(loss_align(a, Tensor::zeros({31})), Error);
}

TEST_CASE("loss gradients") {
  Rng rng(4);
  auto y = random_tensor(rng, {3, 5}, 3.0);
  auto z = binary(rng, {3, 5});
  CHECK(check_gradients([&] { return loss_sed(y, z); }, {y}).max_rel_error < 1e-6);
  CHECK(check_gradients([&] { return loss_sed(y, z, 3); }, {y}).max_rel_error < 1e-6);
  auto x = random_tensor(rng, {4, 3});
  auto xh = random_tensor(rng, {4, 3});
  CHECK(check_gradients([&] { return loss_ae(x, xh); }, {x, xh}).max_rel_error < 1e-6);
  // Random reals never tie, so the L1 kink is not probed.
  auto l = random_tensor(rng, {8});
  auto zz = random_tensor(rng, {8});
  CHECK(check_gradients([&] { return loss_align(l, zz); }, {l, zz}).max_rel_error < 1e-6);

  // Tie rule: zero subgradient on equal coordinates.
  auto p = Tensor::from_data({3}, {1.0, 2.0, 3.0}, true);
  auto q = Tensor::from_data({3}, {1.0, 0.0, 5.0}, true);
  backward(loss_align(p, q));
  CHECK(p.grad()[0] == 0.0);
  CHECK(q.grad()[0] == 0.0);
  CHECK(p.grad()[1] == doctest::Approx(1.0 / 3));
  CHECK(p.grad()[2] == doctest::Approx(-1.0 / 3));
}

TEST_CASE("total_loss") {
  auto b = total_loss(0.7, 2.0, 0.1, {}, true);
  CHECK(b.total == doctest::Approx(0.82).epsilon(1e-15));
  CHECK(total_loss(0.7, 2.0, 0.1, {0.0, 0.0}, true).total == 0.7);
  auto na = total_loss(0.7, 2.0, 0.1, {}, false);
  CHECK(na.total == 0.7);
  CHECK(na.l_ae == 0.0);
  CHECK(na.l_align == 0.0);

  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double s = rng.uniform(0, 3), a = rng.uniform(0, 50), g = rng.uniform(0, 2);
    const double independent = s + 0.01 * a + 1.0 * g;  // left to right
    REQUIRE(total_loss(s, a, g, {}, true).total == independent);
    auto t = combine_losses(Tensor::scalar(s), Tensor::scalar(a), Tensor::scalar(g), {}, true);
    REQUIRE(t.item() == independent);
  }
  CHECK(combine_losses(Tensor::scalar(0.3), Tensor(), Tensor(), {}, false).item() == 0.3);
}
