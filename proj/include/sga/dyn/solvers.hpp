#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "sga/autodiff/tensor.hpp"
#include "sga/dyn/brownian.hpp"

// Fixed-step integrators over latent states. One annotated frame is one unit
// of time; each frame is split into 1/h substeps. States are [rows, d]
// tensors; fields act row-wise, so rows evolve independently. Every substep
// is an ordinary tape op, so gradients flow through the unrolled solver.
namespace sga::dyn {

using ad::BasicTensor;

enum class SolverMethod { euler, adams_bashforth4, euler_maruyama_ito, reversible_heun_stratonovich };

SolverMethod parse_solver_method(const std::string& name);
std::string to_string(SolverMethod method);
[[nodiscard]] bool is_sde_method(SolverMethod method);

struct SolverSpec {
  SolverMethod method = SolverMethod::adams_bashforth4;
  double h = 1.0 / 25.0;

  /// Substeps per frame; throws ConfigError unless 1/h is a positive integer
  /// (within 1e-6) and the method can start with that step.
  [[nodiscard]] std::size_t substeps() const;
  void validate() const;
};

template <typename T>
using Field = std::function<BasicTensor<T>(const BasicTensor<T>&)>;

/// Adams-Bashforth 4-step coefficients for F_n, F_{n-1}, F_{n-2}, F_{n-3}.
inline constexpr std::array<double, 4> kAb4Coefficients{55.0 / 24.0, -59.0 / 24.0, 37.0 / 24.0, -9.0 / 24.0};

/// h * sum_j b_j F_{n-j}; `history` is {F_n, F_{n-1}, F_{n-2}, F_{n-3}}.
double ab4_increment(double h, const std::array<double, 4>& history);

/// States at frames 1..horizon. Requires an ODE method and horizon >= 1.
template <typename T>
std::vector<BasicTensor<T>> ode_solve(const Field<T>& field, const BasicTensor<T>& z0, std::size_t horizon,
                                      const SolverSpec& spec);

/// States at frames 1..horizon with diagonal noise sigma(z) * dW. The path
/// must have dims == z0.size() and the spec's step.
template <typename T>
std::vector<BasicTensor<T>> sde_solve(const Field<T>& drift, const Field<T>& diffusion, const BasicTensor<T>& z0,
                                      std::size_t horizon, const SolverSpec& spec, BrownianPath& path);

/// Reversible Heun forward over `horizon` frames, then its algebraic inverse
/// along the same path; returns the reconstructed z0.
template <typename T>
BasicTensor<T> reverse_heun_roundtrip(const Field<T>& drift, const Field<T>& diffusion, const BasicTensor<T>& z0,
                                      std::size_t horizon, const SolverSpec& spec, BrownianPath& path,
                                      BrownianPath* backward_path = nullptr);

}  // namespace sga::dyn
