#pragma once

#include <cstddef>
#include <limits>

#include "ssed/tensor.hpp"

namespace ssed::objective {

inline constexpr std::size_t kAllFrames = std::numeric_limits<std::size_t>::max();

/// Frame-wise binary cross-entropy on logits y against 0/1 targets z, both
/// N x T, averaged over N * T' cells where T' = min(T, valid_frames):
///   max(y, 0) - y z + log(1 + exp(-|y|))
/// Frames at or past valid_frames are excluded (padding mask).
Tensor loss_sed(const Tensor& logits, const Tensor& targets, std::size_t valid_frames = kAllFrames);

// Mean squared error over all cells.
Tensor loss_ae(const Tensor& x, const Tensor& x_hat);

// Mean absolute difference. At exact ties the subgradient is 0.
Tensor loss_align(const Tensor& l_shared, const Tensor& z_shared);

struct LossWeights {
  double alpha = 0.01;
  double beta = 1.0;
};

struct LossBreakdown {
  double l_sed = 0.0;
  double l_ae = 0.0;
  double l_align = 0.0;
  double total = 0.0;
};

// total = (l_sed + alpha l_ae) + beta l_align when aligned, else l_sed.
LossBreakdown total_loss(double l_sed, double l_ae, double l_align, const LossWeights& weights, bool aligned);

/// Differentiable counterpart of total_loss with the same evaluation order,
/// so its value equals total_loss(...).total bit for bit. l_ae and l_align
/// are ignored (and may be undefined) when not aligned.
Tensor combine_losses(const Tensor& l_sed, const Tensor& l_ae, const Tensor& l_align,
                      const LossWeights& weights, bool aligned);

}  // namespace ssed::objective
