#include "ssed/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace ssed {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::non_scalar_backward: return "non_scalar_backward";
    case Errc::graph_cycle: return "graph_cycle";
    case Errc::missing_gradient: return "missing_gradient";
    case Errc::wav_malformed_header: return "wav_malformed_header";
    case Errc::wav_unsupported_encoding: return "wav_unsupported_encoding";
    case Errc::wav_unsupported_bit_depth: return "wav_unsupported_bit_depth";
    case Errc::wrong_sample_rate: return "wrong_sample_rate";
    case Errc::feature_cache_malformed: return "feature_cache_malformed";
    case Errc::io_error: return "io_error";
    case Errc::duplicate_clip: return "duplicate_clip";
    case Errc::invalid_interval: return "invalid_interval";
    case Errc::unknown_label: return "unknown_label";
    case Errc::missing_annotations: return "missing_annotations";
    case Errc::malformed_row: return "malformed_row";
    case Errc::invalid_probability: return "invalid_probability";
    case Errc::empty_corpus: return "empty_corpus";
    case Errc::table_field_count: return "table_field_count";
    case Errc::table_duplicate_label: return "table_duplicate_label";
    case Errc::table_non_numeric: return "table_non_numeric";
    case Errc::table_malformed_header: return "table_malformed_header";
    case Errc::absent_label: return "absent_label";
    case Errc::unseen_scene: return "unseen_scene";
    case Errc::config_error: return "config_error";
    case Errc::checkpoint_error: return "checkpoint_error";
  }
  return "unknown";
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

namespace {

thread_local bool g_grad_enabled = true;

void check_shape(const Shape& shape, std::size_t size) {
  for (auto extent : shape) {
    if (extent == 0) fail(Errc::invalid_argument, "tensor extents must be positive: " + shape_str(shape));
  }
  if (shape_numel(shape) != size) {
    fail(Errc::shape_mismatch, "data length " + std::to_string(size) +
                                   " does not match shape " + shape_str(shape));
  }
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  auto n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  check_shape(shape, data.size());
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) fail(Errc::invalid_argument, "use of undefined tensor");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    fail(Errc::invalid_argument, "axis " + std::to_string(axis) + " out of range for " + shape_str(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::span<const double> Tensor::data() const {
  shape();
  return node_->data;
}

std::span<double> Tensor::mutable_data() {
  shape();
  if (!node_->is_leaf()) fail(Errc::invalid_argument, "mutable_data() on a non-leaf tensor");
  return node_->data;
}

double Tensor::item() const {
  if (numel() != 1) fail(Errc::shape_mismatch, "item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

bool Tensor::has_grad() const { return node_ && !node_->grad.empty(); }

std::span<const double> Tensor::grad() const {
  if (!has_grad()) fail(Errc::missing_gradient, "tensor has no gradient");
  return node_->grad;
}

std::span<double> Tensor::grad_accumulator() const {
  shape();
  if (node_->grad.empty()) node_->grad.assign(node_->data.size(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (node_ && !node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  return from_data(shape(), node_->data, false);
}

Tensor make_result(Shape shape, std::vector<double> data, const std::vector<Tensor>& parents,
                   BackwardFn fn) {
  Tensor out = Tensor::from_data(std::move(shape), std::move(data), false);
  if (!g_grad_enabled) return out;
  bool any = std::any_of(parents.begin(), parents.end(),
                         [](const Tensor& p) { return p.requires_grad(); });
  if (!any) return out;
  out.node_->requires_grad = true;
  out.node_->backward = std::move(fn);
  out.node_->parents.reserve(parents.size());
  for (const auto& p : parents) {
    if (p.requires_grad()) out.node_->parents.push_back(p.node_);
  }
  return out;
}

void backward(const Tensor& output) {
  if (output.numel() != 1) {
    fail(Errc::non_scalar_backward,
         "backward() needs a scalar output, got " + shape_str(output.shape()));
  }
  if (!output.requires_grad()) return;

  // Iterative post-order DFS; a node met again while still open means a cycle.
  enum class Mark { open, done };
  std::unordered_map<detail::Node*, Mark> marks;
  std::vector<detail::Node*> order;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(output.node(), 0);
  marks[output.node()] = Mark::open;
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      auto it = marks.find(parent);
      if (it == marks.end()) {
        marks[parent] = Mark::open;
        stack.emplace_back(parent, 0);
      } else if (it->second == Mark::open) {
        fail(Errc::graph_cycle, "cycle in recorded computation");
      }
    } else {
      marks[node] = Mark::done;
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* node : order) {
    if (!node->is_leaf()) node->grad.assign(node->data.size(), 0.0);
  }
  detail::Node* root = output.node();
  if (root->grad.empty()) root->grad.assign(1, 0.0);
  root->grad[0] += 1.0;

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->is_leaf()) continue;
    node->backward(node->grad);
  }
}

}  // namespace ssed
