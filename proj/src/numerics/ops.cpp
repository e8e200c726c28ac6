#include "ssed/ops.hpp"

#include <cmath>
#include <numeric>

#include "eigen_maps.hpp"

namespace ssed::ops {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    fail(Errc::shape_mismatch, std::string(op) + ": " + shape_str(a.shape()) + " vs " +
                                   shape_str(b.shape()));
  }
}

void require_rank(const Tensor& a, std::size_t rank, const char* op) {
  if (a.rank() != rank) {
    fail(Errc::shape_mismatch, std::string(op) + ": expected rank " + std::to_string(rank) +
                                   ", got " + shape_str(a.shape()));
  }
}

template <class F>
Tensor unary(const Tensor& a, F&& forward_and_derivative) {
  auto x = a.data();
  std::vector<double> out(x.size());
  std::vector<double> deriv(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto [y, d] = forward_and_derivative(x[i]);
    out[i] = y;
    deriv[i] = d;
  }
  return make_result(a.shape(), std::move(out), {a},
                     [a, deriv = std::move(deriv)](std::span<const double> g) {
                       auto ga = a.grad_accumulator();
                       for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv[i];
                     });
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](std::span<const double> g) {
    if (a.requires_grad()) {
      auto ga = a.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](std::span<const double> g) {
    if (a.requires_grad()) {
      auto ga = a.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad_accumulator();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  return make_result(a.shape(), std::move(out), {a, b}, [a, b](std::span<const double> g) {
    if (a.requires_grad()) {
      auto ga = a.grad_accumulator();
      auto y = b.data();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    }
    if (b.requires_grad()) {
      auto gb = b.grad_accumulator();
      auto x = a.data();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return std::pair{x * factor, factor}; });
}

Tensor add_scalar(const Tensor& a, double value) {
  return unary(a, [value](double x) { return std::pair{x + value, 1.0}; });
}

Tensor sum(const Tensor& a) {
  auto x = a.data();
  double total = std::accumulate(x.begin(), x.end(), 0.0);
  return make_result({1}, {total}, {a}, [a](std::span<const double> g) {
    auto ga = a.grad_accumulator();
    for (auto& v : ga) v += g[0];
  });
}

Tensor mean(const Tensor& a) {
  auto x = a.data();
  double n = static_cast<double>(x.size());
  double total = std::accumulate(x.begin(), x.end(), 0.0);
  return make_result({1}, {total / n}, {a}, [a, n](std::span<const double> g) {
    auto ga = a.grad_accumulator();
    for (auto& v : ga) v += g[0] / n;
  });
}

Tensor sigmoid(const Tensor& a) {
  return unary(a, [](double x) {
    double s = stable_sigmoid(x);
    return std::pair{s, s * (1.0 - s)};
  });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) {
    double t = std::tanh(x);
    return std::pair{t, 1.0 - t * t};
  });
}

Tensor swish(const Tensor& a) {
  return unary(a, [](double x) {
    double s = stable_sigmoid(x);
    return std::pair{x * s, s + x * s * (1.0 - s)};
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    fail(Errc::shape_mismatch, "matmul: " + shape_str(a.shape()) + " * " + shape_str(b.shape()));
  }
  std::vector<double> out(m * n);
  as_matrix(out, m, n).noalias() = as_matrix(a.data(), m, k) * as_matrix(b.data(), k, n);
  return make_result({m, n}, std::move(out), {a, b}, [a, b, m, k, n](std::span<const double> g) {
    auto dout = as_matrix(g, m, n);
    if (a.requires_grad()) {
      as_matrix(a.grad_accumulator(), m, k).noalias() += dout * as_matrix(b.data(), k, n).transpose();
    }
    if (b.requires_grad()) {
      as_matrix(b.grad_accumulator(), k, n).noalias() += as_matrix(a.data(), m, k).transpose() * dout;
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(weight, 2, "linear");
  if (x.rank() != 1 && x.rank() != 2) require_rank(x, 2, "linear");
  const std::size_t out_dim = weight.dim(0), in_dim = weight.dim(1);
  const std::size_t rows = x.rank() == 1 ? 1 : x.dim(0);
  if (x.shape().back() != in_dim) {
    fail(Errc::shape_mismatch,
         "linear: input " + shape_str(x.shape()) + " vs weight " + shape_str(weight.shape()));
  }
  const bool has_bias = bias.defined();
  if (has_bias && bias.shape() != Shape{out_dim}) {
    fail(Errc::shape_mismatch,
         "linear: bias " + shape_str(bias.shape()) + " vs weight " + shape_str(weight.shape()));
  }
  std::vector<double> out(rows * out_dim);
  auto y = as_matrix(out, rows, out_dim);
  y.noalias() = as_matrix(x.data(), rows, in_dim) * as_matrix(weight.data(), out_dim, in_dim).transpose();
  if (has_bias) y.rowwise() += as_row(bias.data());
  Shape shape = x.rank() == 1 ? Shape{out_dim} : Shape{rows, out_dim};
  std::vector<Tensor> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return make_result(std::move(shape), std::move(out), parents,
                     [x, weight, bias, has_bias, rows, in_dim, out_dim](std::span<const double> g) {
                       auto dy = as_matrix(g, rows, out_dim);
                       if (x.requires_grad()) {
                         as_matrix(x.grad_accumulator(), rows, in_dim).noalias() +=
                             dy * as_matrix(weight.data(), out_dim, in_dim);
                       }
                       if (weight.requires_grad()) {
                         as_matrix(weight.grad_accumulator(), out_dim, in_dim).noalias() +=
                             dy.transpose() * as_matrix(x.data(), rows, in_dim);
                       }
                       if (has_bias && bias.requires_grad()) {
                         as_row(bias.grad_accumulator()) += dy.colwise().sum();
                       }
                     });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  as_matrix(out, n, m) = as_matrix(a.data(), m, n).transpose();
  return make_result({n, m}, std::move(out), {a}, [a, m, n](std::span<const double> g) {
    as_matrix(a.grad_accumulator(), m, n) += as_matrix(g, n, m).transpose();
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    fail(Errc::shape_mismatch, "reshape: " + shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  auto x = a.data();
  return make_result(std::move(shape), std::vector<double>(x.begin(), x.end()), {a},
                     [a](std::span<const double> g) {
                       auto ga = a.grad_accumulator();
                       for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                     });
}

Tensor permute(const Tensor& a, std::array<std::size_t, 3> order) {
  require_rank(a, 3, "permute");
  std::array<bool, 3> seen{};
  for (auto axis : order) {
    if (axis > 2 || seen[axis]) fail(Errc::invalid_argument, "permute: order is not a permutation");
    seen[axis] = true;
  }
  const Shape& in = a.shape();
  const std::array<std::size_t, 3> in_stride{in[1] * in[2], in[2], 1};
  Shape out_shape{in[order[0]], in[order[1]], in[order[2]]};
  // Source offset of every destination element, reused by backward.
  std::vector<std::size_t> source(a.numel());
  std::size_t dst = 0;
  for (std::size_t i = 0; i < out_shape[0]; ++i)
    for (std::size_t j = 0; j < out_shape[1]; ++j)
      for (std::size_t k = 0; k < out_shape[2]; ++k)
        source[dst++] = i * in_stride[order[0]] + j * in_stride[order[1]] + k * in_stride[order[2]];
  auto x = a.data();
  std::vector<double> out(source.size());
  for (std::size_t d = 0; d < source.size(); ++d) out[d] = x[source[d]];
  return make_result(std::move(out_shape), std::move(out), {a},
                     [a, source = std::move(source)](std::span<const double> g) {
                       auto ga = a.grad_accumulator();
                       for (std::size_t d = 0; d < g.size(); ++d) ga[source[d]] += g[d];
                     });
}

Tensor row(const Tensor& a, std::size_t index) {
  require_rank(a, 2, "row");
  const std::size_t n = a.dim(1);
  if (index >= a.dim(0)) fail(Errc::invalid_argument, "row: index out of range");
  auto x = a.data().subspan(index * n, n);
  return make_result({n}, std::vector<double>(x.begin(), x.end()), {a},
                     [a, index, n](std::span<const double> g) {
                       auto ga = a.grad_accumulator().subspan(index * n, n);
                       for (std::size_t i = 0; i < n; ++i) ga[i] += g[i];
                     });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) fail(Errc::invalid_argument, "stack_rows: no rows");
  const Shape& first = rows.front().shape();
  if (first.size() != 1) fail(Errc::shape_mismatch, "stack_rows: rows must be rank 1");
  const std::size_t n = first[0];
  std::vector<double> out;
  out.reserve(rows.size() * n);
  for (const auto& r : rows) {
    if (r.shape() != first) fail(Errc::shape_mismatch, "stack_rows: ragged rows");
    auto x = r.data();
    out.insert(out.end(), x.begin(), x.end());
  }
  return make_result({rows.size(), n}, std::move(out), rows, [rows, n](std::span<const double> g) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r].requires_grad()) continue;
      auto gr = rows[r].grad_accumulator();
      for (std::size_t i = 0; i < n; ++i) gr[i] += g[r * n + i];
    }
  });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank() || a.rank() < 1 || a.rank() > 2) {
    fail(Errc::shape_mismatch, "concat: " + shape_str(a.shape()) + " with " + shape_str(b.shape()));
  }
  const std::size_t rows = a.rank() == 1 ? 1 : a.dim(0);
  if (a.rank() == 2 && b.dim(0) != rows) {
    fail(Errc::shape_mismatch, "concat: row counts differ, " + shape_str(a.shape()) + " with " +
                                   shape_str(b.shape()));
  }
  const std::size_t na = a.shape().back(), nb = b.shape().back();
  std::vector<double> out(rows * (na + nb));
  auto x = a.data(), y = b.data();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.begin() + r * na, na, out.begin() + r * (na + nb));
    std::copy_n(y.begin() + r * nb, nb, out.begin() + r * (na + nb) + na);
  }
  Shape shape = a.rank() == 1 ? Shape{na + nb} : Shape{rows, na + nb};
  return make_result(std::move(shape), std::move(out), {a, b},
                     [a, b, rows, na, nb](std::span<const double> g) {
                       if (a.requires_grad()) {
                         auto ga = a.grad_accumulator();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t i = 0; i < na; ++i) ga[r * na + i] += g[r * (na + nb) + i];
                       }
                       if (b.requires_grad()) {
                         auto gb = b.grad_accumulator();
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t i = 0; i < nb; ++i)
                             gb[r * nb + i] += g[r * (na + nb) + na + i];
                       }
                     });
}

Tensor broadcast_rows(const Tensor& v, std::size_t rows) {
  require_rank(v, 1, "broadcast_rows");
  if (rows == 0) fail(Errc::invalid_argument, "broadcast_rows: zero rows");
  const std::size_t n = v.dim(0);
  auto x = v.data();
  std::vector<double> out(rows * n);
  for (std::size_t r = 0; r < rows; ++r) std::copy(x.begin(), x.end(), out.begin() + r * n);
  return make_result({rows, n}, std::move(out), {v}, [v, rows, n](std::span<const double> g) {
    auto gv = v.grad_accumulator();
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t i = 0; i < n; ++i) gv[i] += g[r * n + i];
  });
}

Tensor narrow(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length) {
  const Shape& in = a.shape();
  if (axis >= in.size()) fail(Errc::invalid_argument, "narrow: axis out of range");
  if (length == 0 || start + length > in[axis]) {
    fail(Errc::invalid_argument, "narrow: range [" + std::to_string(start) + ", " +
                                     std::to_string(start + length) + ") exceeds axis extent " +
                                     std::to_string(in[axis]));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= in[i];
  for (std::size_t i = axis + 1; i < in.size(); ++i) inner *= in[i];
  Shape out_shape = in;
  out_shape[axis] = length;
  const std::size_t extent = in[axis];
  auto x = a.data();
  std::vector<double> out(outer * length * inner);
  for (std::size_t o = 0; o < outer; ++o)
    std::copy_n(x.begin() + (o * extent + start) * inner, length * inner,
                out.begin() + o * length * inner);
  return make_result(std::move(out_shape), std::move(out), {a},
                     [a, outer, inner, extent, start, length](std::span<const double> g) {
                       auto ga = a.grad_accumulator();
                       for (std::size_t o = 0; o < outer; ++o)
                         for (std::size_t i = 0; i < length * inner; ++i)
                           ga[(o * extent + start) * inner + i] += g[o * length * inner + i];
                     });
}

Tensor channel_mean(const Tensor& a) {
  require_rank(a, 3, "channel_mean");
  const std::size_t c = a.dim(0), hw = a.dim(1) * a.dim(2);
  auto x = a.data();
  std::vector<double> out(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double total = 0.0;
    for (std::size_t i = 0; i < hw; ++i) total += x[ch * hw + i];
    out[ch] = total / static_cast<double>(hw);
  }
  return make_result({c}, std::move(out), {a}, [a, c, hw](std::span<const double> g) {
    auto ga = a.grad_accumulator();
    const double inv = 1.0 / static_cast<double>(hw);
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t i = 0; i < hw; ++i) ga[ch * hw + i] += g[ch] * inv;
  });
}

}  // namespace ssed::ops
