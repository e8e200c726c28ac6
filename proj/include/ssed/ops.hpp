#pragma once

#include <array>
#include <vector>

#include "ssed/tensor.hpp"

// Differentiable tensor operations. Shapes must match exactly; the only
// broadcasting is bias addition (linear) and tensor-scalar arithmetic.
namespace ssed::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor swish(const Tensor& a);

// [m x k] * [k x n]
Tensor matmul(const Tensor& a, const Tensor& b);
// x: [in] or [rows x in]; weight: [out x in]; bias: [out] (may be undefined).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
Tensor transpose(const Tensor& a);
Tensor reshape(const Tensor& a, Shape shape);
// Rank-3 axis permutation: result axis i is input axis order[i].
Tensor permute(const Tensor& a, std::array<std::size_t, 3> order);

// Row `index` of a rank-2 tensor as a rank-1 tensor.
Tensor row(const Tensor& a, std::size_t index);
Tensor stack_rows(const std::vector<Tensor>& rows);
// Rank-1: plain concatenation. Rank-2: concatenation along columns.
Tensor concat(const Tensor& a, const Tensor& b);
// [n] -> [rows x n]
Tensor broadcast_rows(const Tensor& v, std::size_t rows);
// Keeps indices [start, start + length) of `axis`.
Tensor narrow(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length);
// [C x H x W] -> [C], average over each channel's H*W positions.
Tensor channel_mean(const Tensor& a);

}  // namespace ssed::ops
