#pragma once

// Central finite-difference oracle in 64-bit precision. Independent of the
// tape: it only evaluates the forward function.

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "sga/autodiff/tensor.hpp"

namespace sga::testing {

using ad::Tensor64;

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

/// Relative error with a floor on the denominator so near-zero gradients are
/// judged by absolute error.
inline double rel_error(double analytic, double numeric, double floor = 1e-3) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares tape gradients of `loss(inputs)` w.r.t. every element of every
/// input against central differences with step `h`.
inline GradCheckResult gradcheck(const std::function<Tensor64(const std::vector<Tensor64>&)>& loss,
                                 std::vector<Tensor64> inputs, double h = 1e-3,
                                 std::size_t max_elements_per_input = 0) {
  for (auto& in : inputs) {
    in.set_requires_grad(true);
    in.clear_grad();
  }
  ad::Tape<double> tape;
  {
    ad::TapeScope<double> scope(tape);
    auto out = loss(inputs);
    tape.backward(out);
  }
  GradCheckResult result;
  ad::NoGradScope<double> no_grad;
  for (auto& in : inputs) {
    std::vector<double> analytic(in.size(), 0.0);
    if (in.has_grad()) analytic.assign(in.grad().begin(), in.grad().end());
    auto data = in.mutable_data();
    const std::size_t limit =
        max_elements_per_input == 0 ? data.size() : std::min(data.size(), max_elements_per_input);
    for (std::size_t i = 0; i < limit; ++i) {
      const double orig = data[i];
      data[i] = orig + h;
      const double up = loss(inputs).item();
      data[i] = orig - h;
      const double down = loss(inputs).item();
      data[i] = orig;
      const double numeric = (up - down) / (2.0 * h);
      result.max_rel_error = std::max(result.max_rel_error, rel_error(analytic[i], numeric));
      result.max_abs_error = std::max(result.max_abs_error, std::abs(analytic[i] - numeric));
      ++result.checked;
    }
  }
  return result;
}

}  // namespace sga::testing
