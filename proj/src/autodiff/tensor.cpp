#include "sga/autodiff/tensor.hpp"

#include <sstream>

namespace sga::ad {

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
BasicTensor<T> BasicTensor<T>::zeros(Shape shape) {
  return full(std::move(shape), T(0));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::full(Shape shape, T value) {
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->data.assign(numel(shape), value);
  impl->shape = std::move(shape);
  return BasicTensor(std::move(impl));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::from(Shape shape, std::vector<T> data) {
  if (numel(shape) != data.size()) {
    throw ShapeError("tensor: shape " + shape_str(shape) + " does not hold " +
                     std::to_string(data.size()) + " elements");
  }
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  return BasicTensor(std::move(impl));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::scalar(T value) {
  return from({1}, {value});
}

template <typename T>
BasicTensor<T> BasicTensor<T>::parameter(Shape shape, std::vector<T> data) {
  auto t = from(std::move(shape), std::move(data));
  t.impl_->requires_grad = true;
  return t;
}

template <typename T>
std::size_t BasicTensor<T>::rows() const {
  return impl_->shape.empty() ? 1 : impl_->shape.front();
}

template <typename T>
std::size_t BasicTensor<T>::cols() const {
  if (impl_->shape.size() < 2) return impl_->shape.empty() ? 1 : impl_->shape.front();
  return impl_->shape.back();
}

template <typename T>
T BasicTensor<T>::item() const {
  if (impl_->data.size() != 1) {
    throw ContractError("item: tensor of shape " + shape_str(impl_->shape) + " is not a scalar");
  }
  return impl_->data.front();
}

template <typename T>
void BasicTensor<T>::zero_grad() {
  impl_->grad.assign(impl_->data.size(), T(0));
}

template <typename T>
BasicTensor<T> BasicTensor<T>::detach() const {
  return from(impl_->shape, impl_->data);
}

template <typename T>
void Tape<T>::record(const std::shared_ptr<TensorImpl<T>>& output, Rule rule) {
  if (consumed_) throw ContractError("tape: recording after backward requires reset()");
  output->tape = this;
  output->node_index = nodes_.size();
  nodes_.push_back(Node{output, std::move(rule)});
}

template <typename T>
void Tape<T>::backward(const BasicTensor<T>& loss) {
  const auto& impl = loss.impl();
  if (impl->data.size() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_str(impl->shape));
  }
  if (impl->tape != this) throw ContractError("backward: loss belongs to a different tape");
  if (consumed_) throw ContractError("backward: tape already consumed; call reset()");
  impl->ensure_grad();
  impl->grad[0] += T(1);
  for (std::size_t i = impl->node_index + 1; i-- > 0;) {
    auto& node = nodes_[i];
    if (node.output->grad.empty()) continue;
    node.rule();
  }
  consumed_ = true;
}

template <typename T>
void Tape<T>::reset() {
  for (auto& node : nodes_) node.output->tape = nullptr;
  nodes_.clear();
  consumed_ = false;
}

template class BasicTensor<float>;
template class BasicTensor<double>;
template class Tape<float>;
template class Tape<double>;

}  // namespace sga::ad
