#include <algorithm>
#include <cmath>

#include "ssed/objective.hpp"
#include "ssed/ops.hpp"

namespace ssed::objective {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(Errc::shape_mismatch, std::string(op) + ": " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor loss_sed(const Tensor& logits, const Tensor& targets, std::size_t valid_frames) {
  require_same_shape(logits, targets, "loss_sed");
  if (logits.rank() != 2) fail(Errc::shape_mismatch, "loss_sed expects N x T, got " + shape_str(logits.shape()));
  const std::size_t n = logits.dim(0), t = logits.dim(1);
  const std::size_t used = std::min(t, valid_frames);
  if (used == 0 || n == 0) fail(Errc::invalid_argument, "loss_sed over zero cells");
  auto y = logits.data(), z = targets.data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < used; ++j) {
      const double v = y[i * t + j];
      total += std::max(v, 0.0) - v * z[i * t + j] + std::log1p(std::exp(-std::abs(v)));
    }
  }
  const double cells = static_cast<double>(n * used);
  return make_result({1}, {total / cells}, {logits, targets},
                     [logits, targets, n, t, used, cells](std::span<const double> g) {
                       auto y = logits.data(), z = targets.data();
                       if (logits.requires_grad()) {
                         auto gy = logits.grad_accumulator();
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < used; ++j) {
                             const std::size_t k = i * t + j;
                             gy[k] += g[0] * (stable_sigmoid(y[k]) - z[k]) / cells;
                           }
                       }
                       if (targets.requires_grad()) {
                         auto gz = targets.grad_accumulator();
                         for (std::size_t i = 0; i < n; ++i)
                           for (std::size_t j = 0; j < used; ++j) gz[i * t + j] -= g[0] * y[i * t + j] / cells;
                       }
                     });
}

Tensor loss_ae(const Tensor& x, const Tensor& x_hat) {
  require_same_shape(x, x_hat, "loss_ae");
  auto d = ops::sub(x, x_hat);
  return ops::mean(ops::mul(d, d));
}

Tensor loss_align(const Tensor& l_shared, const Tensor& z_shared) {
  require_same_shape(l_shared, z_shared, "loss_align");
  if (l_shared.numel() == 0) fail(Errc::invalid_argument, "loss_align over empty vectors");
  auto a = l_shared.data(), b = z_shared.data();
  const double count = static_cast<double>(a.size());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return make_result({1}, {total / count}, {l_shared, z_shared},
                     [l_shared, z_shared, count](std::span<const double> g) {
                       auto a = l_shared.data(), b = z_shared.data();
                       auto sign = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
                       if (l_shared.requires_grad()) {
                         auto ga = l_shared.grad_accumulator();
                         for (std::size_t i = 0; i < a.size(); ++i) ga[i] += g[0] * sign(a[i] - b[i]) / count;
                       }
                       if (z_shared.requires_grad()) {
                         auto gb = z_shared.grad_accumulator();
                         for (std::size_t i = 0; i < a.size(); ++i) gb[i] -= g[0] * sign(a[i] - b[i]) / count;
                       }
                     });
}

LossBreakdown total_loss(double l_sed, double l_ae, double l_align, const LossWeights& weights, bool aligned) {
  LossBreakdown out;
  out.l_sed = l_sed;
  if (!aligned) {
    out.total = l_sed;
    return out;
  }
  out.l_ae = l_ae;
  out.l_align = l_align;
  out.total = (l_sed + weights.alpha * l_ae) + weights.beta * l_align;
  return out;
}

Tensor combine_losses(const Tensor& l_sed, const Tensor& l_ae, const Tensor& l_align, const LossWeights& weights,
                      bool aligned) {
  if (!aligned) return l_sed;
  if (!l_ae.defined() || !l_align.defined()) {
    fail(Errc::invalid_argument, "aligned mode needs l_ae and l_align");
  }
  return ops::add(ops::add(l_sed, ops::scale(l_ae, weights.alpha)), ops::scale(l_align, weights.beta));
}

}  // namespace ssed::objective
