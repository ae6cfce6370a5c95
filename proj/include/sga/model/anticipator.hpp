#pragma once

#include <cstddef>
#include <vector>

#include "sga/nn/layers.hpp"

namespace sga::model {

using ad::BasicTensor;

/// Rows of several pair histories. Row order is free; `group` names the
/// history a row belongs to (dense ids 0..groups-1) and `position` its frame.
template <typename T>
struct Sequence {
  BasicTensor<T> rows;
  std::vector<std::size_t> group;
  std::vector<std::size_t> position;

  [[nodiscard]] std::size_t groups() const;
};

template <typename T>
struct Rollout {
  Sequence<T> context;                  // original rows followed by generated ones
  std::vector<BasicTensor<T>> generated;  // step h: [groups, d], row g = group g
};

/// Causal single-layer attention over pair histories that predicts the next
/// representation of each history.
template <typename T>
class Anticipator {
 public:
  Anticipator() = default;
  Anticipator(nn::ParameterStore<T>& store, const std::string& name, std::size_t d_rel, std::size_t ff_dim,
              std::size_t max_positions, Rng& rng);

  /// Output row r is the prediction for the frame after row r's, attending
  /// only to rows of its group at earlier or equal positions.
  [[nodiscard]] BasicTensor<T> predict_next(const Sequence<T>& seq) const;

  /// Generates `horizon` representations per group, appending each to the
  /// context before producing the next. Groups must be non-empty.
  [[nodiscard]] Rollout<T> anticipate(const Sequence<T>& context, std::size_t horizon) const;

  nn::AttentionLayer<T> layer;
  nn::Embedding<T> position_embedding;
};

}  // namespace sga::model
