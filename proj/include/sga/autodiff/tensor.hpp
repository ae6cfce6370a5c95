#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sga::ad {

using Shape = std::vector<std::size_t>;

/// Raised when operand shapes do not satisfy an op's arity rules.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a caller violates a documented precondition (non-scalar loss,
/// consumed tape, missing gradient).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

template <typename T>
class Tape;

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;
  bool requires_grad = false;
  // Set when the tensor is the output of a node recorded on `tape`.
  const Tape<T>* tape = nullptr;
  std::size_t node_index = 0;

  [[nodiscard]] bool needs_grad() const { return requires_grad || tape != nullptr; }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

/// Dense row-major tensor handle. Copies share storage; use `clone()` or
/// `detach()` for an independent buffer.
template <typename T>
class BasicTensor {
 public:
  BasicTensor() = default;
  explicit BasicTensor(std::shared_ptr<TensorImpl<T>> impl) : impl_(std::move(impl)) {}

  static BasicTensor zeros(Shape shape);
  static BasicTensor full(Shape shape, T value);
  static BasicTensor from(Shape shape, std::vector<T> data);
  static BasicTensor scalar(T value);
  /// Leaf tensor that accumulates gradients.
  static BasicTensor parameter(Shape shape, std::vector<T> data);

  [[nodiscard]] bool defined() const { return impl_ != nullptr; }
  [[nodiscard]] const Shape& shape() const { return impl_->shape; }
  [[nodiscard]] std::size_t rank() const { return impl_->shape.size(); }
  [[nodiscard]] std::size_t size() const { return impl_->data.size(); }
  [[nodiscard]] std::size_t rows() const;
  [[nodiscard]] std::size_t cols() const;

  [[nodiscard]] std::span<const T> data() const { return impl_->data; }
  [[nodiscard]] std::span<T> mutable_data() { return impl_->data; }
  [[nodiscard]] bool has_grad() const { return impl_->grad.size() == impl_->data.size(); }
  [[nodiscard]] std::span<const T> grad() const { return impl_->grad; }
  [[nodiscard]] std::span<T> mutable_grad() { return impl_->grad; }

  [[nodiscard]] T item() const;
  [[nodiscard]] T at(std::size_t i) const { return impl_->data.at(i); }
  [[nodiscard]] T at(std::size_t r, std::size_t c) const { return impl_->data.at(r * cols() + c); }

  [[nodiscard]] bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) { impl_->requires_grad = on; }
  /// Allocates (or resets) a zero-filled gradient buffer.
  void zero_grad();
  void clear_grad() { impl_->grad.clear(); }

  /// Copy of the values with no tape history.
  [[nodiscard]] BasicTensor detach() const;
  [[nodiscard]] BasicTensor clone() const { return detach(); }
  [[nodiscard]] std::vector<T> to_vector() const { return impl_->data; }

  [[nodiscard]] const std::shared_ptr<TensorImpl<T>>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl<T>> impl_;
};

/// Append-only record of differentiable operations. Nodes are stored in
/// creation order, so reverse replay is a valid topological traversal.
template <typename T>
class Tape {
 public:
  using Rule = std::function<void()>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  void record(const std::shared_ptr<TensorImpl<T>>& output, Rule rule);
  /// Seeds d(loss)/d(loss) = 1 and replays local gradients in reverse.
  void backward(const BasicTensor<T>& loss);
  void reset();

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] bool consumed() const { return consumed_; }

 private:
  struct Node {
    std::shared_ptr<TensorImpl<T>> output;
    Rule rule;
  };
  std::vector<Node> nodes_;
  bool consumed_ = false;
};

template <typename T>
Tape<T>*& active_tape() {
  thread_local Tape<T>* tape = nullptr;
  return tape;
}

/// Routes ops issued on this thread to `tape` for the scope's lifetime.
template <typename T>
class TapeScope {
 public:
  explicit TapeScope(Tape<T>& tape) : previous_(active_tape<T>()) { active_tape<T>() = &tape; }
  ~TapeScope() { active_tape<T>() = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape<T>* previous_;
};

/// Suspends recording on this thread (inference).
template <typename T>
class NoGradScope {
 public:
  NoGradScope() : previous_(active_tape<T>()) { active_tape<T>() = nullptr; }
  ~NoGradScope() { active_tape<T>() = previous_; }
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape<T>* previous_;
};

template <typename T>
void backward(const BasicTensor<T>& loss) {
  const auto& impl = loss.impl();
  if (!impl || impl->tape == nullptr) {
    throw ContractError("backward: loss was not produced on a tape");
  }
  const_cast<Tape<T>*>(impl->tape)->backward(loss);
}

using Tensor = BasicTensor<float>;
using Tensor64 = BasicTensor<double>;
using TapeF = Tape<float>;

extern template class BasicTensor<float>;
extern template class BasicTensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace sga::ad
