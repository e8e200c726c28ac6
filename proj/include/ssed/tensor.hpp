#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ssed/error.hpp"

namespace ssed {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

class Tensor;

// Called during backward() with the gradient of the node's output. The
// closure accumulates into its inputs through Tensor::grad_accumulator().
using BackwardFn = std::function<void(std::span<const double> out_grad)>;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until something accumulates into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;

  bool is_leaf() const { return !backward; }
};

}  // namespace detail

/// Dense row-major float64 array with an optional gradient slot.
///
/// Tensor is a cheap handle: copies share storage. Values produced by
/// differentiable operations record their inputs so that backward() can
/// propagate gradients to every reachable leaf that requires them.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  // Leaf tensors only; writing into an interior value would desynchronize
  // it from the recorded computation.
  std::span<double> mutable_data();
  double item() const;
  double operator[](std::size_t i) const { return data()[i]; }

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  // Zero-initialized on first use. For op implementations.
  std::span<double> grad_accumulator() const;
  void zero_grad();

  // Same values, no history, no gradient.
  Tensor detach() const;

  detail::Node* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  std::shared_ptr<detail::Node> node_;

  friend Tensor make_result(Shape, std::vector<double>, const std::vector<Tensor>&,
                            BackwardFn);
  friend void backward(const Tensor&);
};

// Wraps freshly computed values into a tensor. When gradients are enabled and
// some parent requires them, the result records `fn` and its parents.
Tensor make_result(Shape shape, std::vector<double> data,
                   const std::vector<Tensor>& parents, BackwardFn fn);

// Accumulates d(output)/d(leaf) into every reachable leaf with
// requires_grad. Leaf gradients add up across calls; call zero_grad between
// optimizer steps.
void backward(const Tensor& output);

bool grad_enabled();

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace ssed
