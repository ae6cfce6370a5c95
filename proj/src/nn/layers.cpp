#include "sga/nn/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace sga::nn {

template <typename T>
BasicTensor<T> ParameterStore<T>::create(const std::string& name, Shape shape, Init init, Rng& rng,
                                         T gain) {
  for (const auto& [existing, _] : entries_) {
    if (existing == name) throw std::invalid_argument("duplicate parameter name: " + name);
  }
  const std::size_t n = ad::numel(shape);
  std::vector<T> data(n, T(0));
  switch (init) {
    case Init::zeros:
      break;
    case Init::glorot: {
      const double fan_in = shape.size() == 2 ? static_cast<double>(shape[0]) : 1.0;
      const double fan_out = static_cast<double>(shape.back());
      const double limit = gain * std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& v : data) v = static_cast<T>(rng.uniform(-limit, limit));
      break;
    }
    case Init::small_normal:
      for (auto& v : data) v = static_cast<T>(gain * 0.02 * rng.normal());
      break;
  }
  auto tensor = BasicTensor<T>::parameter(std::move(shape), std::move(data));
  entries_.emplace_back(name, tensor);
  return tensor;
}

template <typename T>
std::vector<BasicTensor<T>> ParameterStore<T>::tensors() const {
  std::vector<BasicTensor<T>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.second);
  return out;
}

template <typename T>
std::optional<BasicTensor<T>> ParameterStore<T>::find(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  return std::nullopt;
}

template <typename T>
std::size_t ParameterStore<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

template <typename T>
Linear<T>::Linear(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
                  Rng& rng, Init init) {
  weight = store.create(name + ".weight", {in, out}, init, rng);
  bias = store.create(name + ".bias", {out}, Init::zeros, rng);
}

template <typename T>
BasicTensor<T> Linear<T>::operator()(const BasicTensor<T>& x) const {
  return ad::add(ad::matmul(x, weight), bias);
}

template <typename T>
Mlp<T>::Mlp(ParameterStore<T>& store, const std::string& name, const std::vector<std::size_t>& widths,
            Activation activation, Rng& rng, Init last_init)
    : activation_(activation) {
  if (widths.size() < 2) throw std::invalid_argument("mlp " + name + ": needs at least two widths");
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool last = i + 2 == widths.size();
    layers_.emplace_back(store, name + "." + std::to_string(i), widths[i], widths[i + 1], rng,
                         last ? last_init : Init::glorot);
  }
}

template <typename T>
BasicTensor<T> Mlp<T>::operator()(const BasicTensor<T>& x) const {
  BasicTensor<T> h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i](h);
    if (i + 1 < layers_.size()) h = activation_ == Activation::relu ? ad::relu(h) : ad::tanh(h);
  }
  return h;
}

template <typename T>
Embedding<T>::Embedding(ParameterStore<T>& store, const std::string& name, std::size_t count,
                        std::size_t dim, Rng& rng) {
  table = store.create(name, {count, dim}, Init::small_normal, rng, T(25));
}

template <typename T>
BasicTensor<T> Embedding<T>::operator()(const std::vector<std::size_t>& ids) const {
  return ad::gather_rows(table, ids);
}

template <typename T>
AttentionLayer<T>::AttentionLayer(ParameterStore<T>& store, const std::string& name, std::size_t d,
                                  std::size_t ff_dim, Rng& rng)
    : dim(d) {
  query = Linear<T>(store, name + ".query", d, d, rng);
  key = Linear<T>(store, name + ".key", d, d, rng);
  value = Linear<T>(store, name + ".value", d, d, rng);
  output = Linear<T>(store, name + ".output", d, d, rng);
  ff_in = Linear<T>(store, name + ".ff_in", d, ff_dim, rng);
  ff_out = Linear<T>(store, name + ".ff_out", ff_dim, d, rng);
}

template <typename T>
BasicTensor<T> AttentionLayer<T>::attention_weights(const BasicTensor<T>& x,
                                                    const BasicTensor<T>* mask) const {
  auto q = query(x);
  auto k = key(x);
  auto scores = ad::scale(ad::matmul(q, ad::transpose(k)), T(1) / std::sqrt(static_cast<T>(dim)));
  if (mask != nullptr) scores = ad::add(scores, *mask);
  return ad::softmax(scores);
}

template <typename T>
BasicTensor<T> AttentionLayer<T>::operator()(const BasicTensor<T>& x, const BasicTensor<T>* mask) const {
  auto attn = attention_weights(x, mask);
  auto h = ad::add(x, output(ad::matmul(attn, value(x))));
  return ad::add(h, ff_out(ad::relu(ff_in(h))));
}

template <typename T>
EncoderStack<T>::EncoderStack(ParameterStore<T>& store, const std::string& name, std::size_t dim,
                              std::size_t ff_dim, std::size_t depth, Rng& rng) {
  for (std::size_t i = 0; i < depth; ++i) {
    layers.emplace_back(store, name + ".layer" + std::to_string(i), dim, ff_dim, rng);
  }
}

template <typename T>
BasicTensor<T> EncoderStack<T>::operator()(const BasicTensor<T>& x, const BasicTensor<T>* mask) const {
  BasicTensor<T> h = x;
  for (const auto& layer : layers) h = layer(h, mask);
  return h;
}

template <typename T>
BasicTensor<T> group_mask(const std::vector<std::size_t>& group, const std::vector<std::size_t>& position,
                          bool causal) {
  if (group.size() != position.size()) throw std::invalid_argument("group_mask: size mismatch");
  const std::size_t n = group.size();
  std::vector<T> m(n * n, static_cast<T>(kMaskedScore));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (group[i] == group[j] && (!causal || position[j] <= position[i])) m[i * n + j] = T(0);
    }
  }
  return BasicTensor<T>::from({n, n}, std::move(m));
}

template class ParameterStore<float>;
template class ParameterStore<double>;
template class Linear<float>;
template class Linear<double>;
template class Mlp<float>;
template class Mlp<double>;
template class Embedding<float>;
template class Embedding<double>;
template class AttentionLayer<float>;
template class AttentionLayer<double>;
template class EncoderStack<float>;
template class EncoderStack<double>;
template BasicTensor<float> group_mask<float>(const std::vector<std::size_t>&,
                                              const std::vector<std::size_t>&, bool);
template BasicTensor<double> group_mask<double>(const std::vector<std::size_t>&,
                                                const std::vector<std::size_t>&, bool);

}  // namespace sga::nn
