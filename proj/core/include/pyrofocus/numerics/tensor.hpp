#pragma once

// Dense row-major tensors with tape-free reverse-mode differentiation.
//
// A Tensor is a cheap shared handle onto a graph node. Operations record a
// backward closure on their result when gradient recording is enabled and at
// least one input requires a gradient. `backward()` on a scalar result walks
// the recorded graph in reverse topological order and accumulates gradients
// into every reachable node that requires one.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace pyrofocus::nn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

template <typename T>
class Tensor;

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty until a backward pass touches the node
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T{0});
  }
};

}  // namespace detail

/// Whether ops on this thread record backward closures.
bool grad_enabled();

/// Disables gradient recording on the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  /// Throws DimensionError when product(shape) != values.size().
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const T> values() const;
  /// Direct write access. Intended for leaves (parameters, inputs); writing
  /// into an op result after it has been consumed invalidates its graph.
  std::span<T> mutable_values();

  bool requires_grad() const;
  void set_requires_grad(bool flag);
  bool has_grad() const;
  /// Gradient storage; empty span when no backward pass reached this node.
  std::span<const T> grad() const;
  std::span<T> mutable_grad();
  void zero_grad();

  /// Value of a single-element tensor.
  T item() const;

  /// Reverse pass from this scalar. Throws DimensionError if size() != 1.
  void backward() const;

  /// Copy of the values with no graph attached.
  Tensor detach() const;

  const std::shared_ptr<detail::Node<T>>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node<T>> node);

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

namespace detail {

/// Builds an op result. The backward closure is kept only when recording is
/// enabled and some input requires a gradient; it receives the result node
/// and must accumulate into the grads of inputs that require them.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> value, const std::vector<Tensor<T>>& inputs,
                      std::function<void(Node<T>&)> backward);

}  // namespace detail

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace pyrofocus::nn
