#include <doctest.h>

#include <cmath>

#include "ssed/model.hpp"
#include "ssed/objective.hpp"
#include "ssed/ops.hpp"
#include "expect_error.hpp"
#include "gradcheck.hpp"
#include "mini_config.hpp"
#include "temp_dir.hpp"

using namespace ssed;
using namespace ssed::model;
using ssed::testing::check_gradients;
using ssed::testing::error_code_of;
using ssed::testing::mini_config;
using ssed::testing::random_tensor;

namespace {

void fill(const Tensor& t, double v) {
  Tensor h = t;
  for (auto& x : h.mutable_data()) x = v;
}

void zero_all(const Network& net) {
  for (const auto& p : net.parameters()) fill(p.tensor, 0.0);
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

Tensor aligned_loss(const Network& net, const Tensor& x, const Tensor& e, const Tensor& z,
                    const objective::LossWeights& w = {}) {
  auto tr = net.forward(x, e);
  return objective::combine_losses(objective::loss_sed(tr.logits, z), objective::loss_ae(x, tr.x_hat),
                                   objective::loss_align(tr.l_shared, tr.z_shared), w, true);
}

Tensor binary(Rng& rng, Shape shape) {
  std::vector<double> v(shape_numel(shape));
  for (auto& x : v) x = rng.bernoulli(0.3) ? 1.0 : 0.0;
  return Tensor::from_data(std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("parameter count is a function of the config") {
  NetworkConfig none;
  CHECK(Network(none, 1).parameter_count() == 367673);
  NetworkConfig al;
  al.sed.fusion = Fusion::aligned;
  al.sed.context_dim = 768;
  CHECK(Network(al, 1).parameter_count() == 1541114);
  CHECK(Network(al, 1).parameter_count() == Network(al, 2).parameter_count());
}

TEST_CASE("decoder plan reaches the input size") {
  NetworkConfig c;
  c.sed.fusion = Fusion::aligned;
  c.sed.context_dim = 768;
  auto plan = plan_decoder(c);
  CHECK(plan.seed == ops::Extent2{20, 2});
  REQUIRE(plan.strides.size() == 3);
  CHECK(plan.extents.back().h >= 500);
  CHECK(plan.extents.back().w >= 64);
  // Smallest uniform strides: one less per axis falls short.
  CHECK(plan.strides[0] == ops::Extent2{3, 4});
  CHECK(plan.extents.back() == ops::Extent2{540, 112});
}

TEST_CASE("config validation") {
  auto c = mini_config();
  c.sed.freq_pool = {2, 2, 3};
  CHECK(error_code_of([&] { c.validate(); }) == Errc::config_error);
  c = mini_config();
  c.align.time_pool = 25;
  CHECK(error_code_of([&] { c.validate(); }) == Errc::config_error);
  c = mini_config(Fusion::direct, 0);
  CHECK(error_code_of([&] { c.validate(); }) == Errc::config_error);
  auto j = to_json(mini_config());
  CHECK(to_json(network_config_from_json(j)) == j);
  j["bogus"] = 1;
  CHECK(error_code_of([&] { network_config_from_json(j); }) == Errc::config_error);
}

TEST_CASE("sed_forward on the miniature config") {
  Rng rng(1);
  auto x = random_tensor(rng, {20, 16}, 1.0, false);
  SUBCASE("all-zero parameters give zero logits") {
    Network net(mini_config(Fusion::none), 3);
    zero_all(net);
    auto tr = net.forward(x, Tensor());
    CHECK(tr.logits.shape() == Shape{3, 20});
    for (double v : tr.logits.data()) CHECK(v == 0.0);
    for (auto b : predict_events(tr.logits.data())) CHECK(b == 0);
  }
  SUBCASE("intermediate shapes") {
    Network net(mini_config(), 3);
    auto e = random_tensor(rng, {7}, 1.0, false);
    auto tr = net.forward(x, e);
    CHECK(tr.cnn_out.shape() == Shape{4, 20, 2});
    CHECK(tr.gru_out.shape() == Shape{20, 6});
    CHECK(tr.ffn_input.shape() == Shape{20, 11});
    CHECK(tr.logits.shape() == Shape{3, 20});
    CHECK(tr.l.shape() == Shape{5});
    CHECK(tr.z.shape() == Shape{4});
    CHECK(tr.l_shared.shape() == Shape{3});
    CHECK(tr.z_shared.shape() == Shape{3});
    CHECK(tr.x_hat.shape() == Shape{20, 16});
    for (double v : tr.logits.data()) CHECK(std::isfinite(v));
  }
  SUBCASE("mode none never reads the scene vector") {
    Network net(mini_config(Fusion::none), 3);
    auto a = net.forward(x, Tensor()).logits;
    auto b = net.forward(x, random_tensor(rng, {9}, 5.0, false)).logits;
    CHECK(values(a) == values(b));
  }
  SUBCASE("context dimension must match the mode") {
    Network direct(mini_config(Fusion::direct, 4), 3);
    CHECK(error_code_of([&] { direct.forward(x, Tensor::zeros({5})); }) == Errc::shape_mismatch);
    CHECK(error_code_of([&] { direct.forward(x, Tensor()); }) == Errc::shape_mismatch);
    CHECK(error_code_of([&] { direct.forward(Tensor::zeros({21, 16}), Tensor::zeros({4})); }) ==
          Errc::shape_mismatch);
    CHECK(direct.forward(x, Tensor::zeros({4})).logits.shape() == Shape{3, 20});
  }
  SUBCASE("direct fusion: the scene vector changes the logits") {
    Network net(mini_config(Fusion::direct, 4), 3);
    auto a = net.forward(x, Tensor::from_data({4}, {1, 0, 0, 0})).logits;
    auto b = net.forward(x, Tensor::from_data({4}, {0, 1, 0, 0})).logits;
    CHECK(values(a) != values(b));
  }
  SUBCASE("aligned: zeroing l matters iff the fused FFN block is nonzero") {
    Network net(mini_config(), 3);
    auto e = random_tensor(rng, {7}, 1.0, false);
    auto with_l = values(net.forward(x, e).logits);
    auto w2 = values(net.parameter("ctx.proj2.weight"));
    auto b2 = values(net.parameter("ctx.proj2.bias"));
    fill(net.parameter("ctx.proj2.weight"), 0.0);
    fill(net.parameter("ctx.proj2.bias"), 0.0);
    auto tr0 = net.forward(x, e);
    for (double v : tr0.l.data()) REQUIRE(v == 0.0);
    CHECK(values(tr0.logits) != with_l);

    // Zero the first-FFN columns that see l, then compare again.
    Tensor w = net.parameter("sed.ffn1.weight");
    auto wd = w.mutable_data();
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t col = 6; col < 11; ++col) wd[r * 11 + col] = 0.0;
    auto zero_l = values(net.forward(x, e).logits);
    Tensor pw = net.parameter("ctx.proj2.weight");
    std::copy(w2.begin(), w2.end(), pw.mutable_data().begin());
    Tensor pb = net.parameter("ctx.proj2.bias");
    std::copy(b2.begin(), b2.end(), pb.mutable_data().begin());
    CHECK(values(net.forward(x, e).logits) == zero_l);
  }
}

TEST_CASE("alignment sub-modules") {
  Rng rng(2);
  Network net(mini_config(), 5);
  SUBCASE("project_context") {
    auto e = random_tensor(rng, {7});
    CHECK(net.project_context(e).shape() == Shape{5});
    CHECK(check_gradients([&] { return ops::sum(net.project_context(e)); }, {e}).max_rel_error < 1e-4);
    CHECK(error_code_of([&] { net.project_context(Tensor::zeros({6})); }) == Errc::shape_mismatch);
    fill(net.parameter("ctx.proj1.weight"), 0.0);
    fill(net.parameter("ctx.proj2.weight"), 0.0);
    for (double v : values(net.project_context(e))) CHECK(v == 0.0);
  }
  SUBCASE("encode_bottleneck") {
    CHECK(net.encode_bottleneck(Tensor::zeros({4, 20, 2})).shape() == Shape{4});
    for (double v : values(net.encode_bottleneck(Tensor::zeros({4, 20, 2})))) CHECK(v == 0.0);
    // Constant encoder output per channel: any time permutation of the map gives the same z.
    fill(net.parameter("ae.enc.weight"), 0.0);
    fill(net.parameter("ae.enc.bias"), 0.7);
    auto a = random_tensor(rng, {4, 20, 2}, 1.0, false);
    auto b = ops::permute(a, {0, 1, 2});
    auto z = values(net.encode_bottleneck(a));
    for (double v : z) CHECK(v == doctest::Approx(0.7 / (1 + std::exp(-0.7))));
    CHECK(values(net.encode_bottleneck(b)) == z);
  }
  SUBCASE("decode_reconstruction") {
    auto z = random_tensor(rng, {4});
    CHECK(net.decode_reconstruction(z).shape() == Shape{20, 16});
    CHECK(check_gradients([&] { return ops::mean(net.decode_reconstruction(z)); }, {z}).max_rel_error < 1e-4);
    zero_all(net);
    for (double v : values(net.decode_reconstruction(Tensor::zeros({4})))) CHECK(v == 0.0);
  }
  SUBCASE("shared-space heads are independent") {
    auto l = random_tensor(rng, {5}, 1.0, false);
    auto z = random_tensor(rng, {4}, 1.0, false);
    CHECK(net.to_shared(l).shape() == Shape{3});
    CHECK(net.to_shared_acoustic(z).shape() == Shape{3});
    auto before = values(net.to_shared_acoustic(z));
    fill(net.parameter("head.semantic.weight"), 0.3);
    CHECK(values(net.to_shared_acoustic(z)) == before);
    zero_all(net);
    CHECK(objective::loss_align(net.to_shared(l), net.to_shared_acoustic(z)).item() == 0.0);
    CHECK(error_code_of([&] { net.to_shared(Tensor::zeros({4})); }) == Errc::shape_mismatch);
  }
  SUBCASE("non-aligned network has no alignment modules") {
    Network plain(mini_config(Fusion::none), 1);
    CHECK_THROWS_AS(plain.project_context(Tensor::zeros({7})), Error);
  }
}

TEST_CASE("predict_events threshold") {
  CHECK(predict_events(std::vector<double>{0.0, 3.0, -3.0}) == std::vector<std::uint8_t>{0, 1, 0});
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double y = rng.uniform(-30, 30) * (rng.bernoulli(0.1) ? 1e-12 : 1.0);
    const bool by_sigmoid = 1.0 / (1.0 + std::exp(-y)) > 0.5;
    REQUIRE((predict_events(std::vector<double>{y})[0] == 1) == by_sigmoid);
  }
}

TEST_CASE("joint objective gradients") {
  Rng rng(4);
  Network net(mini_config(), 6);
  auto x = random_tensor(rng, {20, 16}, 1.0, false);
  auto e = random_tensor(rng, {7}, 1.0, false);
  auto z = binary(rng, {3, 20});

  SUBCASE("L_AE reaches the last SED convolution") {
    for (auto p : net.parameters()) p.tensor.zero_grad();
    auto tr = net.forward(x, e);
    backward(objective::loss_ae(x, tr.x_hat));
    double norm = 0.0;
    for (double g : net.parameter("sed.conv3.weight").grad()) norm += g * g;
    CHECK(norm > 0.0);
  }
  SUBCASE("gradient of the total is the weighted sum of per-loss gradients") {
    auto grads = [&](int which) {
      for (auto p : net.parameters()) p.tensor.zero_grad();
      auto tr = net.forward(x, e);
      Tensor loss;
      if (which == 0) loss = objective::loss_sed(tr.logits, z);
      if (which == 1) loss = objective::loss_ae(x, tr.x_hat);
      if (which == 2) loss = objective::loss_align(tr.l_shared, tr.z_shared);
      if (which == 3) loss = aligned_loss(net, x, e, z);
      backward(loss);
      std::vector<double> out;
      for (const auto& p : net.parameters()) {
        if (!p.tensor.has_grad()) {
          out.insert(out.end(), p.tensor.numel(), 0.0);
          continue;
        }
        for (double g : p.tensor.grad()) out.push_back(g);
      }
      return out;
    };
    auto gs = grads(0), ga = grads(1), gl = grads(2), gt = grads(3);
    double worst = 0.0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const double combined = gs[i] + 0.01 * ga[i] + 1.0 * gl[i];
      worst = std::max(worst, ssed::testing::relative_error(gt[i], combined, 1e-8));
    }
    CHECK(worst < 1e-10);
  }
  SUBCASE("one AdaBelief step decreases the loss for small learning rates") {
    for (double lr : {1e-3, 1e-4, 1e-5}) {
      Network fresh(mini_config(), 6);
      AdaBelief opt(fresh.parameters(), {lr});
      const double before = aligned_loss(fresh, x, e, z).item();
      opt.zero_grad();
      backward(aligned_loss(fresh, x, e, z));
      opt.step();
      CHECK(aligned_loss(fresh, x, e, z).item() < before);
    }
  }
}

TEST_CASE("checkpoint round trip") {
  ssed::testing::TempDir dir;
  Network net(mini_config(), 8);
  Rng rng(9);
  auto x = random_tensor(rng, {20, 16}, 1.0, false);
  auto e = random_tensor(rng, {7}, 1.0, false);
  save_checkpoint(dir.path() / "ck", net, {{"note", "hello"}});
  auto loaded = load_checkpoint(dir.path() / "ck");
  CHECK(loaded.metadata["note"] == "hello");
  CHECK(values(loaded.network.forward(x, e).logits) == values(net.forward(x, e).logits));
  CHECK(std::filesystem::file_size(dir.path() / "ck" / "sed.conv1.weight.f64") == 8 * 27);
  std::filesystem::resize_file(dir.path() / "ck" / "sed.out.bias.f64", 7);
  CHECK(error_code_of([&] { load_checkpoint(dir.path() / "ck"); }) == Errc::checkpoint_error);
  CHECK(error_code_of([&] { load_checkpoint(dir.path() / "nope"); }) == Errc::checkpoint_error);
}
