// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "swcm/error.hpp"

namespace swcm {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

struct TensorImpl;

// Record of one executed op: the inputs it read and the rule that pushes the
// output gradient back into them.
struct GradNode {
  const char* op = "";
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  // Receives the output tensor (data and grad populated); accumulates into
  // the grad buffers of `inputs` that require grad.
  std::function<void(const TensorImpl& out)> backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a backward pass touches it
  bool requires_grad = false;
  std::shared_ptr<GradNode> node;  // null for leaves

  bool is_leaf() const { return node == nullptr; }
  // Returns the grad buffer, allocating zeros on first use.
  std::vector<double>& grad_buffer();
};

/// Shared handle to a dense row-major f64 array with optional gradient.
///
/// Copying a Tensor copies the handle, not the data: two handles to the same
/// storage behave as one tied parameter. Use `clone()` for a deep copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const double> data() const;
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const { return data()[flat_index]; }

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool has_grad() const;
  // Gradient values; zeros if no backward pass has reached this tensor.
  std::vector<double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Reverse-mode sweep from this scalar. Leaf gradients accumulate across
  /// calls; intermediate gradients are recomputed each time.
  void backward() const;

  Tensor clone(bool requires_grad = false) const;
  Tensor detach() const { return clone(false); }
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

/// Topologically ordered view of the ops reachable from a root tensor.
class ComputeGraph {
 public:
  explicit ComputeGraph(const Tensor& root);

  // Every tensor precedes the tensors computed from it.
  const std::vector<std::shared_ptr<TensorImpl>>& order() const { return order_; }
  std::size_t op_count() const;
  void backward();

 private:
  std::shared_ptr<TensorImpl> root_;
  std::vector<std::shared_ptr<TensorImpl>> order_;
};

/// True while gradient recording is enabled on this thread.
bool grad_enabled();

/// Disables graph recording for its lifetime (inference, scheduled-sampling
/// first pass).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace swcm
