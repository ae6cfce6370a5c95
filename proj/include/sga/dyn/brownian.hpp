#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

namespace sga::dyn {

/// Wiener increments on a fixed grid. Increment k covers [k h, (k+1) h) and
/// is the sum of `refine` finer draws, each N(0, h/refine) and generated
/// from (seed, fine index) alone. Paths with equal seed and equal h/refine
/// therefore share their fine increments, which lets convergence studies
/// coarsen one path.
class BrownianPath {
 public:
  BrownianPath(std::uint64_t seed, double h, std::size_t dims, std::size_t refine = 1);

  /// Increment vector of step k (length dims()); memoized.
  const std::vector<double>& increment(std::size_t k);
  /// W(k h) - W(0).
  std::vector<double> value_at(std::size_t k);

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] std::size_t dims() const { return dims_; }
  [[nodiscard]] std::size_t refine() const { return refine_; }

 private:
  std::uint64_t seed_;
  double h_;
  std::size_t dims_;
  std::size_t refine_;
  std::map<std::size_t, std::vector<double>> cache_;
};

}  // namespace sga::dyn
