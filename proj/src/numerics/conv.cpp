#include "ssed/conv.hpp"

#include <limits>

#include "eigen_maps.hpp"

namespace ssed::ops {

namespace {

struct Geometry {
  std::size_t channels, in_h, in_w, k_h, k_w;
  Extent2 pad, stride;
  std::size_t out_h, out_w;

  std::size_t rows() const { return channels * k_h * k_w; }
  std::size_t cols() const { return out_h * out_w; }
};

Geometry make_geometry(std::size_t channels, std::size_t in_h, std::size_t in_w, std::size_t k_h,
                       std::size_t k_w, Extent2 pad, Extent2 stride, const char* op) {
  if (stride.h == 0 || stride.w == 0) fail(Errc::invalid_argument, std::string(op) + ": stride must be >= 1");
  if (k_h > in_h + 2 * pad.h || k_w > in_w + 2 * pad.w) {
    fail(Errc::shape_mismatch, std::string(op) + ": kernel " + std::to_string(k_h) + "x" +
                                   std::to_string(k_w) + " does not fit padded input " +
                                   std::to_string(in_h + 2 * pad.h) + "x" +
                                   std::to_string(in_w + 2 * pad.w));
  }
  Geometry g{channels, in_h, in_w, k_h, k_w, pad, stride, 0, 0};
  g.out_h = (in_h + 2 * pad.h - k_h) / stride.h + 1;
  g.out_w = (in_w + 2 * pad.w - k_w) / stride.w + 1;
  return g;
}

// cols[(c, i, j), (oh, ow)] = src[c, oh*sh + i - ph, ow*sw + j - pw], zero outside.
std::vector<double> im2col(std::span<const double> src, const Geometry& g) {
  std::vector<double> cols(g.rows() * g.cols(), 0.0);
  std::size_t r = 0;
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t i = 0; i < g.k_h; ++i)
      for (std::size_t j = 0; j < g.k_w; ++j, ++r) {
        double* dst = cols.data() + r * g.cols();
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oh * g.stride.h + i) -
                                   static_cast<std::ptrdiff_t>(g.pad.h);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          const double* line = src.data() + (c * g.in_h + static_cast<std::size_t>(y)) * g.in_w;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ow * g.stride.w + j) -
                                     static_cast<std::ptrdiff_t>(g.pad.w);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            dst[oh * g.out_w + ow] = line[x];
          }
        }
      }
  return cols;
}

// Scatter-add inverse of im2col.
void col2im(std::span<const double> cols, const Geometry& g, std::span<double> dst) {
  std::size_t r = 0;
  for (std::size_t c = 0; c < g.channels; ++c)
    for (std::size_t i = 0; i < g.k_h; ++i)
      for (std::size_t j = 0; j < g.k_w; ++j, ++r) {
        const double* src = cols.data() + r * g.cols();
        for (std::size_t oh = 0; oh < g.out_h; ++oh) {
          const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oh * g.stride.h + i) -
                                   static_cast<std::ptrdiff_t>(g.pad.h);
          if (y < 0 || y >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          double* line = dst.data() + (c * g.in_h + static_cast<std::size_t>(y)) * g.in_w;
          for (std::size_t ow = 0; ow < g.out_w; ++ow) {
            const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ow * g.stride.w + j) -
                                     static_cast<std::ptrdiff_t>(g.pad.w);
            if (x < 0 || x >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
            line[x] += src[oh * g.out_w + ow];
          }
        }
      }
}

void check_bias(const Tensor& bias, std::size_t channels, const char* op) {
  if (bias.defined() && bias.shape() != Shape{channels}) {
    fail(Errc::shape_mismatch, std::string(op) + ": bias " + shape_str(bias.shape()) +
                                   " for " + std::to_string(channels) + " output channels");
  }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, Extent2 padding,
              Extent2 stride) {
  if (input.rank() != 3 || weight.rank() != 4) {
    fail(Errc::shape_mismatch, "conv2d: input " + shape_str(input.shape()) + ", weight " +
                                   shape_str(weight.shape()));
  }
  const std::size_t c_out = weight.dim(0);
  if (weight.dim(1) != input.dim(0)) {
    fail(Errc::shape_mismatch, "conv2d: weight expects " + std::to_string(weight.dim(1)) +
                                   " input channels, input has " + std::to_string(input.dim(0)));
  }
  check_bias(bias, c_out, "conv2d");
  const Geometry g = make_geometry(input.dim(0), input.dim(1), input.dim(2), weight.dim(2),
                                   weight.dim(3), padding, stride, "conv2d");

  auto cols = im2col(input.data(), g);
  std::vector<double> out(c_out * g.cols());
  auto y = as_matrix(out, c_out, g.cols());
  y.noalias() = as_matrix(weight.data(), c_out, g.rows()) * as_matrix(cols, g.rows(), g.cols());
  if (bias.defined()) y.colwise() += as_row(bias.data()).transpose();

  std::vector<Tensor> parents{input, weight};
  if (bias.defined()) parents.push_back(bias);
  return make_result({c_out, g.out_h, g.out_w}, std::move(out), parents,
                     [input, weight, bias, g, c_out, cols = std::move(cols)](std::span<const double> grad) {
                       auto dy = as_matrix(grad, c_out, g.cols());
                       if (weight.requires_grad()) {
                         as_matrix(weight.grad_accumulator(), c_out, g.rows()).noalias() +=
                             dy * as_matrix(cols, g.rows(), g.cols()).transpose();
                       }
                       if (bias.defined() && bias.requires_grad()) {
                         as_row(bias.grad_accumulator()) += dy.rowwise().sum().transpose();
                       }
                       if (input.requires_grad()) {
                         std::vector<double> dcols(g.rows() * g.cols());
                         as_matrix(dcols, g.rows(), g.cols()).noalias() =
                             as_matrix(weight.data(), c_out, g.rows()).transpose() * dy;
                         col2im(dcols, g, input.grad_accumulator());
                       }
                     });
}

Tensor max_pool2d(const Tensor& input, Extent2 pool) {
  if (input.rank() != 3) fail(Errc::shape_mismatch, "max_pool2d: input " + shape_str(input.shape()));
  if (pool.h == 0 || pool.w == 0) fail(Errc::invalid_argument, "max_pool2d: pool extents must be >= 1");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (pool.h > h || pool.w > w) {
    fail(Errc::invalid_argument, "max_pool2d: pool " + std::to_string(pool.h) + "x" +
                                     std::to_string(pool.w) + " larger than input " +
                                     shape_str(input.shape()));
  }
  const std::size_t oh = h / pool.h, ow = w / pool.w;
  auto x = input.data();
  std::vector<double> out(c * oh * ow);
  std::vector<std::size_t> argmax(out.size());
  std::size_t o = 0;
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j, ++o) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_at = (ch * h + i * pool.h) * w + j * pool.w;
        for (std::size_t di = 0; di < pool.h; ++di)
          for (std::size_t dj = 0; dj < pool.w; ++dj) {
            const std::size_t at = (ch * h + i * pool.h + di) * w + j * pool.w + dj;
            if (x[at] > best) {
              best = x[at];
              best_at = at;
            }
          }
        out[o] = best;
        argmax[o] = best_at;
      }
  return make_result({c, oh, ow}, std::move(out), {input},
                     [input, argmax = std::move(argmax)](std::span<const double> grad) {
                       auto gx = input.grad_accumulator();
                       for (std::size_t i = 0; i < grad.size(); ++i) gx[argmax[i]] += grad[i];
                     });
}

Tensor transposed_conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias,
                         Extent2 stride) {
  if (input.rank() != 3 || weight.rank() != 4) {
    fail(Errc::shape_mismatch, "transposed_conv2d: input " + shape_str(input.shape()) +
                                   ", weight " + shape_str(weight.shape()));
  }
  if (weight.dim(0) != input.dim(0)) {
    fail(Errc::shape_mismatch, "transposed_conv2d: weight expects " +
                                   std::to_string(weight.dim(0)) + " input channels, input has " +
                                   std::to_string(input.dim(0)));
  }
  if (stride.h == 0 || stride.w == 0) {
    fail(Errc::invalid_argument, "transposed_conv2d: stride must be >= 1");
  }
  const std::size_t c_in = input.dim(0), c_out = weight.dim(1);
  const std::size_t k_h = weight.dim(2), k_w = weight.dim(3);
  const std::size_t in_h = input.dim(1), in_w = input.dim(2);
  const std::size_t out_h = (in_h - 1) * stride.h + k_h, out_w = (in_w - 1) * stride.w + k_w;
  check_bias(bias, c_out, "transposed_conv2d");
  // Geometry of the forward convolution this operation is the adjoint of.
  const Geometry g = make_geometry(c_out, out_h, out_w, k_h, k_w, {0, 0}, stride, "transposed_conv2d");

  std::vector<double> cols(g.rows() * g.cols());
  as_matrix(cols, g.rows(), g.cols()).noalias() =
      as_matrix(weight.data(), c_in, g.rows()).transpose() * as_matrix(input.data(), c_in, g.cols());
  std::vector<double> out(c_out * out_h * out_w, 0.0);
  col2im(cols, g, out);
  if (bias.defined()) {
    auto b = bias.data();
    const std::size_t plane = out_h * out_w;
    for (std::size_t ch = 0; ch < c_out; ++ch)
      for (std::size_t i = 0; i < plane; ++i) out[ch * plane + i] += b[ch];
  }

  std::vector<Tensor> parents{input, weight};
  if (bias.defined()) parents.push_back(bias);
  return make_result({c_out, out_h, out_w}, std::move(out), parents,
                     [input, weight, bias, g, c_in, c_out](std::span<const double> grad) {
                       const std::size_t plane = g.in_h * g.in_w;
                       if (bias.defined() && bias.requires_grad()) {
                         auto gb = bias.grad_accumulator();
                         for (std::size_t ch = 0; ch < c_out; ++ch) {
                           double total = 0.0;
                           for (std::size_t i = 0; i < plane; ++i) total += grad[ch * plane + i];
                           gb[ch] += total;
                         }
                       }
                       if (!input.requires_grad() && !weight.requires_grad()) return;
                       auto dcols = im2col(grad, g);
                       auto dc = as_matrix(dcols, g.rows(), g.cols());
                       if (input.requires_grad()) {
                         as_matrix(input.grad_accumulator(), c_in, g.cols()).noalias() +=
                             as_matrix(weight.data(), c_in, g.rows()) * dc;
                       }
                       if (weight.requires_grad()) {
                         as_matrix(weight.grad_accumulator(), c_in, g.rows()).noalias() +=
                             as_matrix(input.data(), c_in, g.cols()) * dc.transpose();
                       }
                     });
}

}  // namespace ssed::ops
