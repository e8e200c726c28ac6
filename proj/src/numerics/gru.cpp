#include "ssed/gru.hpp"

#include <cmath>

#include "eigen_maps.hpp"

namespace ssed::ops {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor gru_step(const Tensor& h_prev, const Tensor& x, const GruParams& params) {
  const auto& W = params.input_weight;
  const auto& U = params.hidden_weight;
  const auto& b = params.bias;
  if (W.rank() != 2 || U.rank() != 2 || b.rank() != 1 || h_prev.rank() != 1 || x.rank() != 1) {
    fail(Errc::shape_mismatch, "gru_step: operands must be vectors and matrices");
  }
  const std::size_t H = U.dim(1), D = W.dim(1);
  if (U.dim(0) != 3 * H || W.dim(0) != 3 * H || b.dim(0) != 3 * H) {
    fail(Errc::shape_mismatch, "gru_step: parameter blocks inconsistent with hidden size " +
                                   std::to_string(H));
  }
  if (h_prev.dim(0) != H || x.dim(0) != D) {
    fail(Errc::shape_mismatch, "gru_step: h " + shape_str(h_prev.shape()) + ", x " +
                                   shape_str(x.shape()) + " for hidden " + std::to_string(H) +
                                   ", input " + std::to_string(D));
  }

  auto Wm = as_matrix(W.data(), 3 * H, D);
  auto Um = as_matrix(U.data(), 3 * H, H);
  auto hv = as_row(h_prev.data()).transpose();
  RowVector pre = (Wm * as_row(x.data()).transpose()).transpose() + as_row(b.data());
  pre.head(2 * H) += (Um.topRows(2 * H) * hv).transpose();

  // Saved activations: u, r, c, r*h.
  std::vector<double> saved(4 * H);
  double* u = saved.data();
  double* r = u + H;
  double* c = r + H;
  double* rh = c + H;
  auto h = h_prev.data();
  for (std::size_t i = 0; i < H; ++i) {
    u[i] = sigmoid(pre[static_cast<Eigen::Index>(i)]);
    r[i] = sigmoid(pre[static_cast<Eigen::Index>(H + i)]);
    rh[i] = r[i] * h[i];
  }
  Eigen::Map<const Eigen::VectorXd> rh_vec(rh, static_cast<Eigen::Index>(H));
  Eigen::VectorXd cand = Um.bottomRows(H) * rh_vec;
  std::vector<double> out(H);
  for (std::size_t i = 0; i < H; ++i) {
    c[i] = std::tanh(pre[static_cast<Eigen::Index>(2 * H + i)] + cand[static_cast<Eigen::Index>(i)]);
    out[i] = (1.0 - u[i]) * h[i] + u[i] * c[i];
  }

  return make_result(
      {H}, std::move(out), {h_prev, x, W, U, b},
      [h_prev, x, W, U, b, H, D, saved = std::move(saved)](std::span<const double> g) {
        const double* u = saved.data();
        const double* r = u + H;
        const double* c = r + H;
        const double* rh = c + H;
        auto h = h_prev.data();
        Eigen::VectorXd da(3 * H);
        Eigen::VectorXd dh(H);
        for (std::size_t i = 0; i < H; ++i) {
          const auto k = static_cast<Eigen::Index>(i);
          da[k] = g[i] * (c[i] - h[i]) * u[i] * (1.0 - u[i]);
          da[static_cast<Eigen::Index>(2 * H) + k] = g[i] * u[i] * (1.0 - c[i] * c[i]);
          dh[k] = g[i] * (1.0 - u[i]);
        }
        auto Um = as_matrix(U.data(), 3 * H, H);
        const auto HI = static_cast<Eigen::Index>(H);
        Eigen::VectorXd d_rh = Um.bottomRows(H).transpose() * da.tail(HI);
        for (std::size_t i = 0; i < H; ++i) {
          const auto k = static_cast<Eigen::Index>(i);
          da[HI + k] = d_rh[k] * h[i] * r[i] * (1.0 - r[i]);
          dh[k] += d_rh[k] * r[i];
        }
        if (h_prev.requires_grad()) {
          dh += Um.topRows(2 * H).transpose() * da.head(2 * HI);
          auto gh = h_prev.grad_accumulator();
          for (std::size_t i = 0; i < H; ++i) gh[i] += dh[static_cast<Eigen::Index>(i)];
        }
        if (x.requires_grad()) {
          as_row(x.grad_accumulator()) +=
              (as_matrix(W.data(), 3 * H, D).transpose() * da).transpose();
        }
        if (W.requires_grad()) {
          as_matrix(W.grad_accumulator(), 3 * H, D).noalias() += da * as_row(x.data());
        }
        if (U.requires_grad()) {
          auto gU = as_matrix(U.grad_accumulator(), 3 * H, H);
          gU.topRows(2 * H).noalias() += da.head(2 * HI) * as_row(h);
          gU.bottomRows(H).noalias() +=
              da.tail(HI) * Eigen::Map<const RowVector>(rh, HI);
        }
        if (b.requires_grad()) {
          as_row(b.grad_accumulator()) += da.transpose();
        }
      });
}

}  // namespace ssed::ops
