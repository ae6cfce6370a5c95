#include "sga/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <string>

namespace sga::ad {
namespace {

template <typename T>
using ImplPtr = std::shared_ptr<TensorImpl<T>>;

template <typename T>
Tape<T>* recording_tape(std::initializer_list<const BasicTensor<T>*> inputs) {
  Tape<T>* tape = active_tape<T>();
  if (tape == nullptr) return nullptr;
  for (const auto* t : inputs) {
    if (t->impl()->needs_grad()) return tape;
  }
  return nullptr;
}

template <typename T>
BasicTensor<T> make(Shape shape, std::vector<T> data) {
  auto impl = std::make_shared<TensorImpl<T>>();
  impl->shape = std::move(shape);
  impl->data = std::move(data);
  return BasicTensor<T>(std::move(impl));
}

struct Dims {
  std::size_t rows;
  std::size_t cols;
};

template <typename T>
Dims as_matrix(const BasicTensor<T>& t, const char* op) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
  const auto& s = t.shape();
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  throw ShapeError(std::string(op) + ": expected rank 1 or 2, got " + shape_str(s));
}

template <typename T>
void require_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

template <typename T, typename Fwd, typename Deriv>
BasicTensor<T> unary(const BasicTensor<T>& a, Fwd fwd, Deriv deriv) {
  const auto& x = a.impl()->data;
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  auto out = make<T>(a.shape(), std::move(y));
  if (auto* tape = recording_tape<T>({&a})) {
    ImplPtr<T> ai = a.impl();
    ImplPtr<T> oi = out.impl();
    tape->record(oi, [ai, oi, deriv] {
      ai->ensure_grad();
      for (std::size_t i = 0; i < ai->data.size(); ++i) {
        ai->grad[i] += oi->grad[i] * deriv(ai->data[i], oi->data[i]);
      }
    });
  }
  return out;
}

}  // namespace

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.shape()[1] != b.shape()[0]) {
    throw ShapeError("matmul: cannot multiply " + shape_str(a.shape()) + " by " +
                     shape_str(b.shape()));
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  const T* A = a.impl()->data.data();
  const T* B = b.impl()->data.data();
  std::vector<T> c(m * n, T(0));
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T av = A[i * k + p];
      const T* brow = B + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  auto out = make<T>({m, n}, std::move(c));
  if (auto* tape = recording_tape<T>({&a, &b})) {
    ImplPtr<T> ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape->record(oi, [ai, bi, oi, m, k, n] {
      const T* G = oi->grad.data();
      if (ai->needs_grad()) {
        ai->ensure_grad();
        const T* Bd = bi->data.data();
        for (std::size_t i = 0; i < m; ++i) {
          const T* grow = G + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const T* brow = Bd + p * n;
            T s = T(0);
            for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
            ai->grad[i * k + p] += s;
          }
        }
      }
      if (bi->needs_grad()) {
        bi->ensure_grad();
        const T* Ad = ai->data.data();
        for (std::size_t i = 0; i < m; ++i) {
          const T* grow = G + i * n;
          for (std::size_t p = 0; p < k; ++p) {
            const T av = Ad[i * k + p];
            T* gb = bi->grad.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) gb[j] += av * grow[j];
          }
        }
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a) {
  const auto d = as_matrix(a, "transpose");
  const auto& x = a.impl()->data;
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < d.rows; ++i)
    for (std::size_t j = 0; j < d.cols; ++j) y[j * d.rows + i] = x[i * d.cols + j];
  auto out = make<T>({d.cols, d.rows}, std::move(y));
  if (auto* tape = recording_tape<T>({&a})) {
    ImplPtr<T> ai = a.impl(), oi = out.impl();
    tape->record(oi, [ai, oi, d] {
      ai->ensure_grad();
      for (std::size_t i = 0; i < d.rows; ++i)
        for (std::size_t j = 0; j < d.cols; ++j) ai->grad[i * d.cols + j] += oi->grad[j * d.rows + i];
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const auto& x = a.impl()->data;
  const auto& y = b.impl()->data;
  if (a.shape() == b.shape()) {
    std::vector<T> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] + y[i];
    auto out = make<T>(a.shape(), std::move(z));
    if (auto* tape = recording_tape<T>({&a, &b})) {
      ImplPtr<T> ai = a.impl(), bi = b.impl(), oi = out.impl();
      tape->record(oi, [ai, bi, oi] {
        for (auto* t : {ai.get(), bi.get()}) {
          if (!t->needs_grad()) continue;
          t->ensure_grad();
          for (std::size_t i = 0; i < oi->grad.size(); ++i) t->grad[i] += oi->grad[i];
        }
      });
    }
    return out;
  }
  const auto da = as_matrix(a, "add");
  const auto db = as_matrix(b, "add");
  if (db.rows != 1 || db.cols != da.cols) {
    throw ShapeError("add: cannot broadcast " + shape_str(b.shape()) + " onto " +
                     shape_str(a.shape()));
  }
  std::vector<T> z(x.size());
  for (std::size_t i = 0; i < da.rows; ++i)
    for (std::size_t j = 0; j < da.cols; ++j) z[i * da.cols + j] = x[i * da.cols + j] + y[j];
  auto out = make<T>(a.shape(), std::move(z));
  if (auto* tape = recording_tape<T>({&a, &b})) {
    ImplPtr<T> ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape->record(oi, [ai, bi, oi, da] {
      if (ai->needs_grad()) {
        ai->ensure_grad();
        for (std::size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
      }
      if (bi->needs_grad()) {
        bi->ensure_grad();
        for (std::size_t i = 0; i < da.rows; ++i)
          for (std::size_t j = 0; j < da.cols; ++j) bi->grad[j] += oi->grad[i * da.cols + j];
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "sub");
  const auto& x = a.impl()->data;
  const auto& y = b.impl()->data;
  std::vector<T> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] - y[i];
  auto out = make<T>(a.shape(), std::move(z));
  if (auto* tape = recording_tape<T>({&a, &b})) {
    ImplPtr<T> ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape->record(oi, [ai, bi, oi] {
      if (ai->needs_grad()) {
        ai->ensure_grad();
        for (std::size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
      }
      if (bi->needs_grad()) {
        bi->ensure_grad();
        for (std::size_t i = 0; i < oi->grad.size(); ++i) bi->grad[i] -= oi->grad[i];
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_same_shape(a, b, "mul");
  const auto& x = a.impl()->data;
  const auto& y = b.impl()->data;
  std::vector<T> z(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) z[i] = x[i] * y[i];
  auto out = make<T>(a.shape(), std::move(z));
  if (auto* tape = recording_tape<T>({&a, &b})) {
    ImplPtr<T> ai = a.impl(), bi = b.impl(), oi = out.impl();
    tape->record(oi, [ai, bi, oi] {
      if (ai->needs_grad()) {
        ai->ensure_grad();
        for (std::size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i] * bi->data[i];
      }
      if (bi->needs_grad()) {
        bi->ensure_grad();
        for (std::size_t i = 0; i < oi->grad.size(); ++i) bi->grad[i] += oi->grad[i] * ai->data[i];
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor) {
  return unary<T>(
      a, [factor](T v) { return v * factor; }, [factor](T, T) { return factor; });
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& a) {
  return unary<T>(
      a, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
BasicTensor<T> tanh(const BasicTensor<T>& a) {
  return unary<T>(
      a, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& a) {
  return unary<T>(
      a, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& a) {
  const auto d = as_matrix(a, "softmax");
  const auto& x = a.impl()->data;
  std::vector<T> y(x.size());
  for (std::size_t i = 0; i < d.rows; ++i) {
    const T* xr = x.data() + i * d.cols;
    T* yr = y.data() + i * d.cols;
    T mx = *std::max_element(xr, xr + d.cols);
    T sum = T(0);
    for (std::size_t j = 0; j < d.cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    for (std::size_t j = 0; j < d.cols; ++j) yr[j] /= sum;
  }
  auto out = make<T>(a.shape(), std::move(y));
  if (auto* tape = recording_tape<T>({&a})) {
    ImplPtr<T> ai = a.impl(), oi = out.impl();
    tape->record(oi, [ai, oi, d] {
      ai->ensure_grad();
      for (std::size_t i = 0; i < d.rows; ++i) {
        const T* yr = oi->data.data() + i * d.cols;
        const T* gr = oi->grad.data() + i * d.cols;
        T dot = T(0);
        for (std::size_t j = 0; j < d.cols; ++j) dot += yr[j] * gr[j];
        for (std::size_t j = 0; j < d.cols; ++j) ai->grad[i * d.cols + j] += yr[j] * (gr[j] - dot);
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> concat(const std::vector<BasicTensor<T>>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  if (axis > 1) throw ShapeError("concat: axis " + std::to_string(axis) + " out of range");
  bool any_rank2 = false;
  for (const auto& p : parts) {
    as_matrix(p, "concat");
    any_rank2 = any_rank2 || p.rank() == 2;
  }
  if (!any_rank2 && axis == 1) throw ShapeError("concat: rank-1 inputs only support axis 0");

  std::vector<Dims> dims;
  dims.reserve(parts.size());
  for (const auto& p : parts) dims.push_back(as_matrix(p, "concat"));

  std::vector<T> data;
  Shape shape;
  if (!any_rank2) {
    std::size_t total = 0;
    for (const auto& d : dims) total += d.cols;
    data.reserve(total);
    for (const auto& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
    shape = {total};
  } else if (axis == 0) {
    std::size_t rows = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (dims[i].cols != dims[0].cols) {
        throw ShapeError("concat: column mismatch " + shape_str(parts[0].shape()) + " vs " +
                         shape_str(parts[i].shape()) + " along axis 0");
      }
      rows += dims[i].rows;
    }
    data.reserve(rows * dims[0].cols);
    for (const auto& p : parts) data.insert(data.end(), p.data().begin(), p.data().end());
    shape = {rows, dims[0].cols};
  } else {
    std::size_t cols = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (dims[i].rows != dims[0].rows) {
        throw ShapeError("concat: row mismatch " + shape_str(parts[0].shape()) + " vs " +
                         shape_str(parts[i].shape()) + " along axis 1");
      }
      cols += dims[i].cols;
    }
    const std::size_t rows = dims[0].rows;
    data.resize(rows * cols);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      const auto& src = parts[k].impl()->data;
      for (std::size_t i = 0; i < rows; ++i)
        std::copy_n(src.data() + i * dims[k].cols, dims[k].cols, data.data() + i * cols + offset);
      offset += dims[k].cols;
    }
    shape = {rows, cols};
  }
  auto out = make<T>(std::move(shape), std::move(data));

  Tape<T>* tape = active_tape<T>();
  bool needed = false;
  for (const auto& p : parts) needed = needed || p.impl()->needs_grad();
  if (tape != nullptr && needed) {
    std::vector<ImplPtr<T>> ins;
    for (const auto& p : parts) ins.push_back(p.impl());
    ImplPtr<T> oi = out.impl();
    const bool by_rows = !any_rank2 || axis == 0;
    tape->record(oi, [ins, oi, dims, by_rows] {
      const std::size_t out_cols = by_rows ? 0 : oi->shape[1];
      std::size_t offset = 0;
      for (std::size_t k = 0; k < ins.size(); ++k) {
        auto& in = *ins[k];
        const std::size_t n = in.data.size();
        if (in.needs_grad()) {
          in.ensure_grad();
          if (by_rows) {
            for (std::size_t i = 0; i < n; ++i) in.grad[i] += oi->grad[offset + i];
          } else {
            for (std::size_t i = 0; i < dims[k].rows; ++i)
              for (std::size_t j = 0; j < dims[k].cols; ++j)
                in.grad[i * dims[k].cols + j] += oi->grad[i * out_cols + offset + j];
          }
        }
        offset += by_rows ? n : dims[k].cols;
      }
    });
  }
  return out;
}

namespace {

template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& a, std::size_t begin, std::size_t count) {
  const auto d = as_matrix(a, "split");
  if (begin + count > d.cols) throw ShapeError("split: column block exceeds " + shape_str(a.shape()));
  const auto& x = a.impl()->data;
  std::vector<T> y(d.rows * count);
  for (std::size_t i = 0; i < d.rows; ++i)
    std::copy_n(x.data() + i * d.cols + begin, count, y.data() + i * count);
  Shape shape = a.rank() == 1 ? Shape{count} : Shape{d.rows, count};
  auto out = make<T>(std::move(shape), std::move(y));
  if (auto* tape = recording_tape<T>({&a})) {
    ImplPtr<T> ai = a.impl(), oi = out.impl();
    tape->record(oi, [ai, oi, d, begin, count] {
      ai->ensure_grad();
      for (std::size_t i = 0; i < d.rows; ++i)
        for (std::size_t j = 0; j < count; ++j) ai->grad[i * d.cols + begin + j] += oi->grad[i * count + j];
    });
  }
  return out;
}

}  // namespace

template <typename T>
std::vector<BasicTensor<T>> split(const BasicTensor<T>& a, const std::vector<std::size_t>& sizes,
                                  std::size_t axis) {
  const auto d = as_matrix(a, "split");
  const bool by_rows = a.rank() == 2 && axis == 0;
  if (axis > 1 || (a.rank() == 1 && axis != 0)) {
    throw ShapeError("split: axis " + std::to_string(axis) + " invalid for " + shape_str(a.shape()));
  }
  std::size_t total = 0;
  for (auto s : sizes) total += s;
  const std::size_t extent = by_rows ? d.rows : d.cols;
  if (total != extent) {
    throw ShapeError("split: sizes sum to " + std::to_string(total) + " but axis has " +
                     std::to_string(extent) + " in " + shape_str(a.shape()));
  }
  std::vector<BasicTensor<T>> out;
  std::size_t offset = 0;
  for (auto s : sizes) {
    out.push_back(by_rows ? slice_rows(a, offset, s) : slice_cols(a, offset, s));
    offset += s;
  }
  return out;
}

template <typename T>
BasicTensor<T> slice_rows(const BasicTensor<T>& a, std::size_t begin, std::size_t count) {
  if (a.rank() != 2 || begin + count > a.shape()[0]) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " +
                     std::to_string(begin + count) + ") out of range for " + shape_str(a.shape()));
  }
  const std::size_t cols = a.shape()[1];
  const auto& x = a.impl()->data;
  std::vector<T> y(x.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                   x.begin() + static_cast<std::ptrdiff_t>((begin + count) * cols));
  auto out = make<T>({count, cols}, std::move(y));
  if (auto* tape = recording_tape<T>({&a})) {
    ImplPtr<T> ai = a.impl(), oi = out.impl();
    tape->record(oi, [ai, oi, begin, cols] {
      ai->ensure_grad();
      for (std::size_t i = 0; i < oi->grad.size(); ++i) ai->grad[begin * cols + i] += oi->grad[i];
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> gather_rows(const BasicTensor<T>& a, const std::vector<std::size_t>& indices) {
  if (a.rank() != 2) throw ShapeError("gather_rows: expected rank 2, got " + shape_str(a.shape()));
  const std::size_t rows = a.shape()[0], cols = a.shape()[1];
  const auto& x = a.impl()->data;
  std::vector<T> y(indices.size() * cols);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows) {
      throw ShapeError("gather_rows: index " + std::to_string(indices[r]) + " out of range for " +
                       shape_str(a.shape()));
    }
    std::copy_n(x.data() + indices[r] * cols, cols, y.data() + r * cols);
  }
  auto out = make<T>({indices.size(), cols}, std::move(y));
  if (auto* tape = recording_tape<T>({&a})) {
    ImplPtr<T> ai = a.impl(), oi = out.impl();
    tape->record(oi, [ai, oi, indices, cols] {
      ai->ensure_grad();
      for (std::size_t r = 0; r < indices.size(); ++r)
        for (std::size_t j = 0; j < cols; ++j) ai->grad[indices[r] * cols + j] += oi->grad[r * cols + j];
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& a, Shape shape) {
  if (numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  auto out = make<T>(std::move(shape), a.impl()->data);
  if (auto* tape = recording_tape<T>({&a})) {
    ImplPtr<T> ai = a.impl(), oi = out.impl();
    tape->record(oi, [ai, oi] {
      ai->ensure_grad();
      for (std::size_t i = 0; i < oi->grad.size(); ++i) ai->grad[i] += oi->grad[i];
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> reduce_sum(const BasicTensor<T>& a) {
  T s = T(0);
  for (T v : a.data()) s += v;
  auto out = make<T>({1}, {s});
  if (auto* tape = recording_tape<T>({&a})) {
    ImplPtr<T> ai = a.impl(), oi = out.impl();
    tape->record(oi, [ai, oi] {
      ai->ensure_grad();
      const T g = oi->grad[0];
      for (auto& v : ai->grad) v += g;
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> reduce_mean(const BasicTensor<T>& a) {
  if (a.size() == 0) throw ShapeError("reduce_mean: empty tensor");
  return scale(reduce_sum(a), T(1) / static_cast<T>(a.size()));
}

template <typename T>
BasicTensor<T> smooth_l1(const BasicTensor<T>& a) {
  return unary<T>(
      a,
      [](T v) {
        const T av = std::abs(v);
        return av < T(1) ? T(0.5) * v * v : av - T(0.5);
      },
      [](T v, T) {
        if (std::abs(v) < T(1)) return v;
        return v > T(0) ? T(1) : T(-1);
      });
}

template <typename T>
BasicTensor<T> cross_entropy(const BasicTensor<T>& probs, const std::vector<std::size_t>& targets,
                             std::size_t* clamped, T floor) {
  const auto d = as_matrix(probs, "cross_entropy");
  if (targets.size() != d.rows) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                     shape_str(probs.shape()));
  }
  const auto& p = probs.impl()->data;
  T loss = T(0);
  std::vector<bool> was_clamped(d.rows, false);
  for (std::size_t i = 0; i < d.rows; ++i) {
    if (targets[i] >= d.cols) {
      throw ShapeError("cross_entropy: target " + std::to_string(targets[i]) + " out of range for " +
                       shape_str(probs.shape()));
    }
    T v = p[i * d.cols + targets[i]];
    if (!(v >= floor)) {
      v = floor;
      was_clamped[i] = true;
      if (clamped) ++*clamped;
    }
    loss -= std::log(v);
  }
  auto out = make<T>({1}, {loss});
  if (auto* tape = recording_tape<T>({&probs})) {
    ImplPtr<T> pi = probs.impl(), oi = out.impl();
    tape->record(oi, [pi, oi, targets, was_clamped, d] {
      pi->ensure_grad();
      const T g = oi->grad[0];
      for (std::size_t i = 0; i < d.rows; ++i) {
        if (was_clamped[i]) continue;
        const std::size_t k = i * d.cols + targets[i];
        pi->grad[k] -= g / pi->data[k];
      }
    });
  }
  return out;
}

template <typename T>
BasicTensor<T> multilabel_margin(const BasicTensor<T>& scores,
                                 const std::vector<std::vector<std::size_t>>& positives, T margin) {
  const auto d = as_matrix(scores, "multilabel_margin");
  if (positives.size() != d.rows) {
    throw ShapeError("multilabel_margin: " + std::to_string(positives.size()) +
                     " label sets for " + shape_str(scores.shape()));
  }
  const auto& s = scores.impl()->data;
  std::vector<std::vector<char>> is_pos(d.rows, std::vector<char>(d.cols, 0));
  for (std::size_t i = 0; i < d.rows; ++i) {
    if (positives[i].empty()) throw ContractError("multilabel_margin: empty positive set");
    for (auto u : positives[i]) {
      if (u >= d.cols) {
        throw ShapeError("multilabel_margin: label " + std::to_string(u) + " out of range for " +
                         shape_str(scores.shape()));
      }
      is_pos[i][u] = 1;
    }
  }
  T loss = T(0);
  for (std::size_t i = 0; i < d.rows; ++i) {
    const T* r = s.data() + i * d.cols;
    for (std::size_t u = 0; u < d.cols; ++u) {
      if (!is_pos[i][u]) continue;
      for (std::size_t v = 0; v < d.cols; ++v) {
        if (is_pos[i][v]) continue;
        const T term = margin - r[u] + r[v];
        if (term > T(0)) loss += term;
      }
    }
  }
  auto out = make<T>({1}, {loss});
  if (auto* tape = recording_tape<T>({&scores})) {
    ImplPtr<T> si = scores.impl(), oi = out.impl();
    tape->record(oi, [si, oi, is_pos, d, margin] {
      si->ensure_grad();
      const T g = oi->grad[0];
      for (std::size_t i = 0; i < d.rows; ++i) {
        const T* r = si->data.data() + i * d.cols;
        T* gr = si->grad.data() + i * d.cols;
        for (std::size_t u = 0; u < d.cols; ++u) {
          if (!is_pos[i][u]) continue;
          for (std::size_t v = 0; v < d.cols; ++v) {
            if (is_pos[i][v]) continue;
            if (margin - r[u] + r[v] > T(0)) {
              gr[u] -= g;
              gr[v] += g;
            }
          }
        }
      }
    });
  }
  return out;
}

#define SGA_INSTANTIATE_OPS(T)                                                                   \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                  \
  template BasicTensor<T> transpose(const BasicTensor<T>&);                                      \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                     \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                     \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                     \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                                       \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                           \
  template BasicTensor<T> tanh(const BasicTensor<T>&);                                           \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                        \
  template BasicTensor<T> softmax(const BasicTensor<T>&);                                        \
  template BasicTensor<T> concat(const std::vector<BasicTensor<T>>&, std::size_t);               \
  template std::vector<BasicTensor<T>> split(const BasicTensor<T>&,                              \
                                             const std::vector<std::size_t>&, std::size_t);      \
  template BasicTensor<T> slice_rows(const BasicTensor<T>&, std::size_t, std::size_t);           \
  template BasicTensor<T> gather_rows(const BasicTensor<T>&, const std::vector<std::size_t>&);   \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Shape);                                 \
  template BasicTensor<T> reduce_sum(const BasicTensor<T>&);                                     \
  template BasicTensor<T> reduce_mean(const BasicTensor<T>&);                                    \
  template BasicTensor<T> smooth_l1(const BasicTensor<T>&);                                      \
  template BasicTensor<T> cross_entropy(const BasicTensor<T>&, const std::vector<std::size_t>&,  \
                                        std::size_t*, T);                                        \
  template BasicTensor<T> multilabel_margin(const BasicTensor<T>&,                               \
                                            const std::vector<std::vector<std::size_t>>&, T);

SGA_INSTANTIATE_OPS(float)
SGA_INSTANTIATE_OPS(double)

#undef SGA_INSTANTIATE_OPS

}  // namespace sga::ad
