#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssed/tensor.hpp"

namespace ssed {

struct Parameter {
  std::string name;  // dotted path, e.g. "sed.cnn1.weight"
  Tensor tensor;
};

struct AdaBeliefOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-3;
};

/// AdaBelief: Adam with the running variance of (g - m) in place of the raw
/// second moment.
///
///   m <- b1 m + (1 - b1) g
///   s <- b2 s + (1 - b2) (g - m)^2 + eps
///   theta <- theta - lr * m_hat / (sqrt(s_hat) + eps)
///
/// with bias-corrected m_hat = m / (1 - b1^t), s_hat = s / (1 - b2^t) and t
/// the 1-based index of the step being taken.
class AdaBelief {
 public:
  AdaBelief(std::vector<Parameter> params, AdaBeliefOptions options = {});

  // Every parameter must carry a gradient (Errc::missing_gradient otherwise).
  void step();
  void zero_grad();

  std::uint64_t steps_taken() const { return t_; }
  const AdaBeliefOptions& options() const { return options_; }
  void set_learning_rate(double lr) { options_.learning_rate = lr; }

  const std::vector<double>& first_moment(std::size_t i) const { return m_.at(i); }
  const std::vector<double>& belief(std::size_t i) const { return s_.at(i); }
  const std::vector<Parameter>& parameters() const { return params_; }

 private:
  std::vector<Parameter> params_;
  AdaBeliefOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> s_;
  std::uint64_t t_ = 0;
};

}  // namespace ssed
