#pragma once

#include <cstddef>

#include "ssed/tensor.hpp"

namespace ssed::ops {

struct Extent2 {
  std::size_t h = 0;
  std::size_t w = 0;

  friend bool operator==(const Extent2&, const Extent2&) = default;
};

/// Cross-correlation of a [C_in x H x W] input with a
/// [C_out x C_in x kH x kW] weight. `bias` is [C_out] or undefined.
/// Output extent per axis: (in + 2*pad - kernel) / stride + 1.
Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
              Extent2 padding = {0, 0}, Extent2 stride = {1, 1});

/// Padding that preserves spatial extent for an odd kernel at stride 1.
inline Extent2 same_padding(std::size_t kernel_h, std::size_t kernel_w) {
  return {kernel_h / 2, kernel_w / 2};
}

/// Non-overlapping max pooling of a [C x H x W] input. Trailing rows or
/// columns that do not fill a window are dropped. Gradient goes to the first
/// maximal element of each window in row-major scan order.
Tensor max_pool2d(const Tensor& input, Extent2 pool);

/// Adjoint of conv2d with respect to its input. `weight` is
/// [C_in x C_out x kH x kW]; output extent per axis is
/// (in - 1) * stride + kernel.
Tensor transposed_conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                         Extent2 stride = {1, 1});

}  // namespace ssed::ops
