#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sga/autodiff/tensor.hpp"

namespace sga::ad {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment estimates, one buffer per parameter in call order.
template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update. Gradients are zeroed afterwards (the
/// buffers stay allocated). Empty state is initialized on first use.
template <typename T>
void adam_step(std::span<BasicTensor<T>> params, AdamState<T>& state, const AdamConfig& cfg);

extern template void adam_step<float>(std::span<BasicTensor<float>>, AdamState<float>&,
                                      const AdamConfig&);
extern template void adam_step<double>(std::span<BasicTensor<double>>, AdamState<double>&,
                                       const AdamConfig&);

}  // namespace sga::ad
