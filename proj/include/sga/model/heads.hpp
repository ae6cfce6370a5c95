#pragma once

#include <cstddef>
#include <vector>

#include "sga/nn/layers.hpp"

namespace sga::model {

using ad::BasicTensor;

/// Weights of the generation, object, anticipation, box and reconstruction
/// terms.
struct LossWeights {
  double gen = 1.0;
  double object = 1.0;
  double ant = 2.0;
  double boxes = 2.0;
  double recon = 2.0;

  /// Object classification, anticipation, reconstruction.
  static LossWeights variant_plus() { return {0.0, 1.0, 2.0, 0.0, 2.0}; }
  /// Adds the generation head's observed-frame term.
  static LossWeights variant_plus_plus() { return {1.0, 1.0, 2.0, 0.0, 2.0}; }

  /// Throws ConfigError on negative or non-finite entries.
  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

/// Decoder heads, each a two-layer MLP.
template <typename T>
class Heads {
 public:
  Heads() = default;
  /// Creates the object and anticipation heads, then the box heads when
  /// `with_boxes`, then the generation head when `with_gen`.
  Heads(nn::ParameterStore<T>& store, std::size_t d_rel, std::size_t d_obj, std::size_t num_predicates,
        std::size_t num_classes, std::size_t hidden, bool with_boxes, bool with_gen, Rng& rng);

  [[nodiscard]] BasicTensor<T> gen_logits(const BasicTensor<T>& z) const { return gen(z); }
  [[nodiscard]] BasicTensor<T> ant_logits(const BasicTensor<T>& z) const { return ant(z); }
  /// Subject box then object box, squashed to [0,1]: [n, 8].
  [[nodiscard]] BasicTensor<T> boxes(const BasicTensor<T>& z) const;
  [[nodiscard]] BasicTensor<T> object_probs(const BasicTensor<T>& v) const;

  [[nodiscard]] bool has_gen() const { return has_gen_; }
  [[nodiscard]] bool has_boxes() const { return has_boxes_; }

  nn::Mlp<T> object, ant, box_subject, box_object, gen;

 private:
  bool has_gen_ = false;
  bool has_boxes_ = false;
};

/// Sum over rows of sum_{u in P+} sum_{v in P-} max(0, 1 - s[u] + s[v]) on
/// raw scores [rows, |P|].
template <typename T>
BasicTensor<T> predicate_margin_loss(const BasicTensor<T>& scores,
                                     const std::vector<std::vector<std::size_t>>& positives);

/// Sum over rows of -log p[target]; probabilities below 1e-12 are clamped and
/// counted in `clamped`.
template <typename T>
BasicTensor<T> object_ce_loss(const BasicTensor<T>& probs, const std::vector<std::size_t>& targets,
                              std::size_t* clamped = nullptr);

/// Elementwise smooth-L1 (beta 1) summed over all coordinates.
template <typename T>
BasicTensor<T> bbox_regression_loss(const BasicTensor<T>& pred, const BasicTensor<T>& gt);

/// sum_r w_r * sum_c smoothL1(z[r,c] - target[r,c]); callers pass
/// w_r = 1 / N(t)^2 with N(t) the number of objects in the row's frame.
template <typename T>
BasicTensor<T> reconstruction_loss(const BasicTensor<T>& z, const BasicTensor<T>& target,
                                   const std::vector<double>& row_weights);

/// Loss terms of one video. Undefined tensors count as zero.
template <typename T>
struct ObservedTerms {
  BasicTensor<T> gen;
  BasicTensor<T> object;
};

template <typename T>
struct AnticipatedTerms {
  BasicTensor<T> ant;
  BasicTensor<T> boxes;
  BasicTensor<T> recon;
};

/// gen*L_gen + object*L_obj + sum over windows of (ant*L_ant + boxes*L_boxes + recon*L_recon).
template <typename T>
BasicTensor<T> total_loss(const ObservedTerms<T>& observed, const std::vector<AnticipatedTerms<T>>& windows,
                          const LossWeights& w);

}  // namespace sga::model
