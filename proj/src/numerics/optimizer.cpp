#include "ssed/optimizer.hpp"

#include <cmath>

namespace ssed {

AdaBelief::AdaBelief(std::vector<Parameter> params, AdaBeliefOptions options)
    : params_(std::move(params)), options_(options) {
  m_.reserve(params_.size());
  s_.reserve(params_.size());
  for (const auto& p : params_) {
    if (!p.tensor.requires_grad()) {
      fail(Errc::invalid_argument, "parameter '" + p.name + "' does not require grad");
    }
    m_.emplace_back(p.tensor.numel(), 0.0);
    s_.emplace_back(p.tensor.numel(), 0.0);
  }
}

void AdaBelief::step() {
  for (const auto& p : params_) {
    if (!p.tensor.has_grad()) fail(Errc::missing_gradient, "no gradient for parameter '" + p.name + "'");
  }
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2, eps = options_.epsilon;
  const double lr = options_.learning_rate;
  const double t = static_cast<double>(t_);
  const double bc1 = 1.0 - std::pow(b1, t);
  const double bc2 = 1.0 - std::pow(b2, t);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto theta = params_[k].tensor.mutable_data();
    auto g = params_[k].tensor.grad();
    auto& m = m_[k];
    auto& s = s_[k];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      const double dev = g[i] - m[i];
      s[i] = b2 * s[i] + (1.0 - b2) * dev * dev + eps;
      const double m_hat = m[i] / bc1;
      const double s_hat = s[i] / bc2;
      theta[i] -= lr * m_hat / (std::sqrt(s_hat) + eps);
    }
  }
}

void AdaBelief::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

}  // namespace ssed
