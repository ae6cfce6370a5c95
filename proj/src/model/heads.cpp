#include "sga/model/heads.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sga/util/errors.hpp"

namespace sga::model {

void LossWeights::validate() const {
  const double values[] = {gen, object, ant, boxes, recon};
  const char* names[] = {"gen", "object", "ant", "boxes", "recon"};
  for (int i = 0; i < 5; ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw ConfigError(std::string("loss_weights.") + names[i] + ": must be finite and nonnegative");
    }
  }
}

template <typename T>
Heads<T>::Heads(nn::ParameterStore<T>& store, std::size_t d_rel, std::size_t d_obj, std::size_t num_predicates,
                std::size_t num_classes, std::size_t hidden, bool with_boxes, bool with_gen, Rng& rng)
    : has_gen_(with_gen), has_boxes_(with_boxes) {
  object = nn::Mlp<T>(store, "heads.object", {d_obj, hidden, num_classes}, nn::Activation::relu, rng);
  ant = nn::Mlp<T>(store, "heads.ant", {d_rel, hidden, num_predicates}, nn::Activation::relu, rng);
  if (with_boxes) {
    box_subject = nn::Mlp<T>(store, "heads.box_subject", {d_rel, hidden, 4}, nn::Activation::relu, rng);
    box_object = nn::Mlp<T>(store, "heads.box_object", {d_rel, hidden, 4}, nn::Activation::relu, rng);
  }
  if (with_gen) gen = nn::Mlp<T>(store, "heads.gen", {d_rel, hidden, num_predicates}, nn::Activation::relu, rng);
}

template <typename T>
BasicTensor<T> Heads<T>::boxes(const BasicTensor<T>& z) const {
  if (!has_boxes_) throw ad::ContractError("heads: model has no box regression heads");
  return ad::sigmoid(ad::concat<T>({box_subject(z), box_object(z)}, 1));
}

template <typename T>
BasicTensor<T> Heads<T>::object_probs(const BasicTensor<T>& v) const {
  return ad::softmax(object(v));
}

template <typename T>
BasicTensor<T> predicate_margin_loss(const BasicTensor<T>& scores,
                                     const std::vector<std::vector<std::size_t>>& positives) {
  return ad::multilabel_margin(scores, positives, T(1));
}

template <typename T>
BasicTensor<T> object_ce_loss(const BasicTensor<T>& probs, const std::vector<std::size_t>& targets,
                              std::size_t* clamped) {
  return ad::cross_entropy(probs, targets, clamped, T(1e-12));
}

template <typename T>
BasicTensor<T> bbox_regression_loss(const BasicTensor<T>& pred, const BasicTensor<T>& gt) {
  return ad::reduce_sum(ad::smooth_l1(ad::sub(pred, gt)));
}

template <typename T>
BasicTensor<T> reconstruction_loss(const BasicTensor<T>& z, const BasicTensor<T>& target,
                                   const std::vector<double>& row_weights) {
  if (z.shape() != target.shape()) {
    throw ad::ContractError("reconstruction_loss: anticipated " + ad::shape_str(z.shape()) + " vs target " +
                            ad::shape_str(target.shape()) + " (pair sets differ)");
  }
  const std::size_t rows = z.rank() == 2 ? z.rows() : 1;
  if (row_weights.size() != rows) throw ad::ContractError("reconstruction_loss: one weight per row required");
  const std::size_t cols = z.size() / std::max<std::size_t>(rows, 1);
  std::vector<T> w(z.size());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) w[r * cols + c] = static_cast<T>(row_weights[r]);
  return ad::reduce_sum(ad::mul(ad::smooth_l1(ad::sub(z, target)), BasicTensor<T>::from(z.shape(), std::move(w))));
}

template <typename T>
BasicTensor<T> total_loss(const ObservedTerms<T>& observed, const std::vector<AnticipatedTerms<T>>& windows,
                          const LossWeights& w) {
  BasicTensor<T> total = BasicTensor<T>::scalar(T(0));
  auto accumulate = [&](const BasicTensor<T>& term, double weight) {
    if (term.defined()) total = ad::add(total, ad::scale(term, static_cast<T>(weight)));
  };
  accumulate(observed.gen, w.gen);
  accumulate(observed.object, w.object);
  for (const auto& win : windows) {
    accumulate(win.ant, w.ant);
    accumulate(win.boxes, w.boxes);
    accumulate(win.recon, w.recon);
  }
  return total;
}

#define SGA_INSTANTIATE_HEADS(T)                                                                           \
  template class Heads<T>;                                                                                 \
  template BasicTensor<T> predicate_margin_loss(const BasicTensor<T>&,                                     \
                                                const std::vector<std::vector<std::size_t>>&);             \
  template BasicTensor<T> object_ce_loss(const BasicTensor<T>&, const std::vector<std::size_t>&,           \
                                         std::size_t*);                                                    \
  template BasicTensor<T> bbox_regression_loss(const BasicTensor<T>&, const BasicTensor<T>&);              \
  template BasicTensor<T> reconstruction_loss(const BasicTensor<T>&, const BasicTensor<T>&,                \
                                              const std::vector<double>&);                                 \
  template BasicTensor<T> total_loss(const ObservedTerms<T>&, const std::vector<AnticipatedTerms<T>>&,     \
                                     const LossWeights&);

SGA_INSTANTIATE_HEADS(float)
SGA_INSTANTIATE_HEADS(double)

#undef SGA_INSTANTIATE_HEADS

}  // namespace sga::model
