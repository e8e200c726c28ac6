#pragma once

#include "ssed/tensor.hpp"

namespace ssed::ops {

// Gate blocks are stacked in the order (update, reset, candidate):
// input_weight is [3H x D], hidden_weight is [3H x H], bias is [3H].
struct GruParams {
  Tensor input_weight;
  Tensor hidden_weight;
  Tensor bias;

  std::size_t hidden_size() const { return hidden_weight.dim(1); }
  std::size_t input_size() const { return input_weight.dim(1); }
};

/// One GRU update:
///   u  = sigmoid(W_u x + U_u h + b_u)
///   r  = sigmoid(W_r x + U_r h + b_r)
///   c  = tanh(W_c x + U_c (r * h) + b_c)
///   h' = (1 - u) * h + u * c
Tensor gru_step(const Tensor& h_prev, const Tensor& x, const GruParams& params);

}  // namespace ssed::ops
