#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sga/autodiff/ops.hpp"
#include "sga/autodiff/tensor.hpp"
#include "sga/util/rng.hpp"

namespace sga::nn {

using ad::BasicTensor;
using ad::Shape;

enum class Init { zeros, glorot, small_normal };

/// Ordered, uniquely named set of learnable tensors. Registration order is
/// the checkpoint order.
template <typename T>
class ParameterStore {
 public:
  BasicTensor<T> create(const std::string& name, Shape shape, Init init, Rng& rng, T gain = T(1));

  [[nodiscard]] const std::vector<std::pair<std::string, BasicTensor<T>>>& entries() const {
    return entries_;
  }
  [[nodiscard]] std::vector<BasicTensor<T>> tensors() const;
  [[nodiscard]] std::optional<BasicTensor<T>> find(const std::string& name) const;
  [[nodiscard]] std::size_t element_count() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, BasicTensor<T>>> entries_;
};

template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& name, std::size_t in, std::size_t out, Rng& rng,
         Init init = Init::glorot);

  /// x: [n, in] -> [n, out].
  [[nodiscard]] BasicTensor<T> operator()(const BasicTensor<T>& x) const;

  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

enum class Activation { relu, tanh };

/// Fully connected stack with `activation` between layers (none after the last).
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterStore<T>& store, const std::string& name, const std::vector<std::size_t>& widths,
      Activation activation, Rng& rng, Init last_init = Init::glorot);

  [[nodiscard]] BasicTensor<T> operator()(const BasicTensor<T>& x) const;
  [[nodiscard]] std::size_t in_dim() const { return layers_.front().weight.shape()[0]; }
  [[nodiscard]] std::size_t out_dim() const { return layers_.back().weight.shape()[1]; }
  [[nodiscard]] const std::vector<Linear<T>>& layers() const { return layers_; }

 private:
  std::vector<Linear<T>> layers_;
  Activation activation_ = Activation::relu;
};

template <typename T>
class Embedding {
 public:
  Embedding() = default;
  Embedding(ParameterStore<T>& store, const std::string& name, std::size_t count, std::size_t dim,
            Rng& rng);

  [[nodiscard]] BasicTensor<T> operator()(const std::vector<std::size_t>& ids) const;
  [[nodiscard]] std::size_t count() const { return table.shape()[0]; }
  [[nodiscard]] std::size_t dim() const { return table.shape()[1]; }

  BasicTensor<T> table;
};

/// Single-head scaled-dot-product encoder layer:
///   h = x + Wo·softmax(QKᵀ/√d + mask)·V,   out = h + FF(h).
template <typename T>
class AttentionLayer {
 public:
  AttentionLayer() = default;
  AttentionLayer(ParameterStore<T>& store, const std::string& name, std::size_t dim,
                 std::size_t ff_dim, Rng& rng);

  /// x: [L, dim]; mask: optional additive [L, L] (0 = attend, large negative = blocked).
  [[nodiscard]] BasicTensor<T> operator()(const BasicTensor<T>& x,
                                          const BasicTensor<T>* mask = nullptr) const;
  /// Row-stochastic attention matrix the layer would apply to `x`.
  [[nodiscard]] BasicTensor<T> attention_weights(const BasicTensor<T>& x,
                                                 const BasicTensor<T>* mask = nullptr) const;

  Linear<T> query, key, value, output, ff_in, ff_out;
  std::size_t dim = 0;
};

template <typename T>
class EncoderStack {
 public:
  EncoderStack() = default;
  EncoderStack(ParameterStore<T>& store, const std::string& name, std::size_t dim, std::size_t ff_dim,
               std::size_t depth, Rng& rng);

  [[nodiscard]] BasicTensor<T> operator()(const BasicTensor<T>& x,
                                          const BasicTensor<T>* mask = nullptr) const;
  std::vector<AttentionLayer<T>> layers;
};

inline constexpr double kMaskedScore = -1e30;

/// Additive mask letting row i attend to row j iff group[i] == group[j] and,
/// when `causal`, position[j] <= position[i].
template <typename T>
BasicTensor<T> group_mask(const std::vector<std::size_t>& group, const std::vector<std::size_t>& position,
                          bool causal);

}  // namespace sga::nn
