#include "sga/dyn/brownian.hpp"

#include <cmath>

#include "sga/util/errors.hpp"
#include "sga/util/rng.hpp"

namespace sga::dyn {

BrownianPath::BrownianPath(std::uint64_t seed, double h, std::size_t dims, std::size_t refine)
    : seed_(seed), h_(h), dims_(dims), refine_(refine) {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("brownian path: step must be positive");
  if (refine == 0) throw ConfigError("brownian path: refine must be positive");
}

const std::vector<double>& BrownianPath::increment(std::size_t k) {
  auto it = cache_.find(k);
  if (it != cache_.end()) return it->second;
  std::vector<double> dw(dims_, 0.0);
  const double sd = std::sqrt(h_ / static_cast<double>(refine_));
  for (std::size_t r = 0; r < refine_; ++r) {
    Rng rng(mix_seed(seed_, k * refine_ + r));
    for (auto& v : dw) v += sd * rng.normal();
  }
  return cache_.emplace(k, std::move(dw)).first->second;
}

std::vector<double> BrownianPath::value_at(std::size_t k) {
  std::vector<double> w(dims_, 0.0);
  for (std::size_t s = 0; s < k; ++s) {
    const auto& dw = increment(s);
    for (std::size_t i = 0; i < dims_; ++i) w[i] += dw[i];
  }
  return w;
}

}  // namespace sga::dyn
