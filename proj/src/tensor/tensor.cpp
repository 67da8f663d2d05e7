// SPDX-License-Identifier: Apache-2.0
#include "swcm/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace swcm {

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::vector<double>& TensorImpl::grad_buffer() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("zero-sized dimension in " + shape_to_string(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->data.assign(shape_numel(shape), value);
  impl->shape = std::move(shape);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("zero-sized dimension in " + shape_to_string(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_to_string(shape));
  }
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= impl_->shape.size()) throw ShapeError("axis out of range");
  return impl_->shape[axis];
}

std::size_t Tensor::numel() const { return impl_->data.size(); }

std::span<const double> Tensor::data() const { return impl_->data; }
std::span<double> Tensor::mutable_data() { return impl_->data; }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_to_string(shape()));
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  impl_->requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return impl_->grad.size() == impl_->data.size(); }

std::vector<double> Tensor::grad() const {
  if (!has_grad()) return std::vector<double>(numel(), 0.0);
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() { return impl_->grad_buffer(); }

void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor Tensor::clone(bool requires_grad) const {
  auto impl = std::make_shared<TensorImpl>();
  impl->shape = impl_->shape;
  impl->data = impl_->data;
  impl->requires_grad = requires_grad;
  return Tensor(std::move(impl));
}

void Tensor::backward() const {
  ComputeGraph graph(*this);
  graph.backward();
}

ComputeGraph::ComputeGraph(const Tensor& root) : root_(root.impl()) {
  if (!root_) throw Error("backward on undefined tensor");
  // Iterative post-order DFS; a node is emitted after all of its inputs.
  std::unordered_set<const TensorImpl*> visited;
  std::vector<std::pair<std::shared_ptr<TensorImpl>, std::size_t>> stack;
  visited.insert(root_.get());
  stack.emplace_back(root_, 0);
  while (!stack.empty()) {
    auto& top = stack.back();
    const GradNode* node = top.first->node.get();
    if (node && top.second < node->inputs.size()) {
      const auto& child = node->inputs[top.second++];
      if (visited.insert(child.get()).second) stack.emplace_back(child, 0);
      continue;
    }
    order_.push_back(std::move(top.first));
    stack.pop_back();
  }
}

std::size_t ComputeGraph::op_count() const {
  return static_cast<std::size_t>(std::count_if(
      order_.begin(), order_.end(), [](const auto& t) { return !t->is_leaf(); }));
}

void ComputeGraph::backward() {
  if (root_->data.size() != 1) {
    throw ShapeError("backward requires a scalar root, got " + shape_to_string(root_->shape));
  }
  if (!root_->requires_grad) {
    throw Error("backward on a tensor that does not require grad");
  }
  for (const auto& t : order_) {
    if (!t->is_leaf()) t->grad.clear();
  }
  if (root_->is_leaf()) {
    root_->grad_buffer()[0] += 1.0;
    return;
  }
  root_->grad_buffer()[0] = 1.0;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    TensorImpl& t = **it;
    if (t.is_leaf() || t.grad.empty()) continue;
    t.node->backward(t);
  }
  for (const auto& t : order_) {
    if (!t->is_leaf()) {
      t->grad.clear();
      t->grad.shrink_to_fit();
    }
  }
}

}  // namespace swcm
