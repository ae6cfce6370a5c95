#pragma once

#include <cstddef>
#include <vector>

#include "sga/autodiff/tensor.hpp"

// Differentiable tensor operations. Each op computes its value eagerly and,
// when a tape is active and some input needs a gradient, records the local
// gradient rule. Rank-1 tensors of length n behave as a single row [1, n]
// wherever a row view is needed.
namespace sga::ad {

/// [m,k] x [k,n] -> [m,n].
template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a);

/// Elementwise sum. `b` may also be a row vector ([n] or [1,n]) broadcast
/// over the rows of `a`.
template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Elementwise (Hadamard) product of equal shapes.
template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor);

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& a);

/// Softmax along the last axis.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& a);

/// Concatenation along `axis` (0 = rows, 1 = columns for rank 2; rank-1
/// inputs only support axis 0).
template <typename T>
BasicTensor<T> concat(const std::vector<BasicTensor<T>>& parts, std::size_t axis);

/// Inverse of concat: splits `a` into consecutive blocks of `sizes` along `axis`.
template <typename T>
std::vector<BasicTensor<T>> split(const BasicTensor<T>& a, const std::vector<std::size_t>& sizes,
                                  std::size_t axis);

template <typename T>
BasicTensor<T> slice_rows(const BasicTensor<T>& a, std::size_t begin, std::size_t count);

/// Row gather; indices may repeat (gradients accumulate).
template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& a, const std::vector<std::size_t>& indices);

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape);

template <typename T>
BasicTensor<T> reduce_sum(const BasicTensor<T>& a);

template <typename T>
BasicTensor<T> reduce_mean(const BasicTensor<T>& a);

/// Elementwise smooth-L1 with beta = 1: 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise.
template <typename T>
BasicTensor<T> smooth_l1(const BasicTensor<T>& a);

/// Sum over rows of -log(max(p[row, target], floor)). `clamped` counts rows
/// whose target probability fell below the floor.
template <typename T>
BasicTensor<T> cross_entropy(const BasicTensor<T>& probs, const std::vector<std::size_t>& targets,
                             std::size_t* clamped = nullptr, T floor = T(1e-12));

/// Multi-label hinge summed over rows: for each row, sum over positive u and
/// negative v of max(0, margin - s[u] + s[v]).
template <typename T>
BasicTensor<T> multilabel_margin(const BasicTensor<T>& scores,
                                 const std::vector<std::vector<std::size_t>>& positives,
                                 T margin = T(1));

}  // namespace sga::ad
