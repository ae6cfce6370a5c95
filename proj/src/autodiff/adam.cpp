#include "sga/autodiff/adam.hpp"

#include <cmath>
#include <string>

namespace sga::ad {

template <typename T>
void adam_step(std::span<BasicTensor<T>> params, AdamState<T>& state, const AdamConfig& cfg) {
  if (state.m.empty() && state.v.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), T(0));
      state.v.emplace_back(p.size(), T(0));
    }
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ContractError("adam_step: optimizer state tracks " + std::to_string(state.m.size()) +
                        " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (state.m[k].size() != params[k].size() || state.v[k].size() != params[k].size()) {
      throw ContractError("adam_step: state size mismatch for parameter " + std::to_string(k));
    }
    if (!params[k].has_grad()) {
      throw ContractError("adam_step: parameter " + std::to_string(k) + " has no gradient");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto data = params[k].mutable_data();
    auto grad = params[k].mutable_grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = grad[i];
      m[i] = static_cast<T>(cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g);
      v[i] = static_cast<T>(cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      data[i] = static_cast<T>(data[i] - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
      grad[i] = T(0);
    }
  }
}

template void adam_step<float>(std::span<BasicTensor<float>>, AdamState<float>&, const AdamConfig&);
template void adam_step<double>(std::span<BasicTensor<double>>, AdamState<double>&,
                                const AdamConfig&);

}  // namespace sga::ad
