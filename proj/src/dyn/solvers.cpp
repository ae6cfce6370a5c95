#include "sga/dyn/solvers.hpp"

#include <cmath>

#include "sga/autodiff/ops.hpp"
#include "sga/util/errors.hpp"

namespace sga::dyn {

SolverMethod parse_solver_method(const std::string& name) {
  if (name == "euler") return SolverMethod::euler;
  if (name == "adams-bashforth4" || name == "ab4") return SolverMethod::adams_bashforth4;
  if (name == "euler-maruyama" || name == "ito") return SolverMethod::euler_maruyama_ito;
  if (name == "reversible-heun" || name == "stratonovich") return SolverMethod::reversible_heun_stratonovich;
  throw ConfigError("solver: unknown method '" + name + "' (euler|adams-bashforth4|euler-maruyama|reversible-heun)");
}

std::string to_string(SolverMethod method) {
  switch (method) {
    case SolverMethod::euler: return "euler";
    case SolverMethod::adams_bashforth4: return "adams-bashforth4";
    case SolverMethod::euler_maruyama_ito: return "euler-maruyama";
    case SolverMethod::reversible_heun_stratonovich: return "reversible-heun";
  }
  return "unknown";
}

bool is_sde_method(SolverMethod method) {
  return method == SolverMethod::euler_maruyama_ito || method == SolverMethod::reversible_heun_stratonovich;
}

std::size_t SolverSpec::substeps() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("solver.h: must be positive");
  if (h > 1.0) throw ConfigError("solver.h: must not exceed one frame");
  const double n = 1.0 / h;
  const double rounded = std::round(n);
  if (std::abs(n - rounded) > 1e-6) throw ConfigError("solver.h: 1/h must be an integer number of substeps");
  return static_cast<std::size_t>(rounded);
}

void SolverSpec::validate() const {
  (void)substeps();
  if (method == SolverMethod::adams_bashforth4 && h >= 1.0) {
    throw ConfigError("solver.h: adams-bashforth4 needs h < 1 frame to bootstrap its history");
  }
}

double ab4_increment(double h, const std::array<double, 4>& history) {
  double s = 0.0;
  for (std::size_t j = 0; j < 4; ++j) s += kAb4Coefficients[j] * history[j];
  return h * s;
}

namespace {

template <typename T>
BasicTensor<T> axpy(const BasicTensor<T>& y, T a, const BasicTensor<T>& x) {
  return ad::add(y, ad::scale(x, a));
}

template <typename T>
BasicTensor<T> rk4_step(const Field<T>& f, const BasicTensor<T>& z, const BasicTensor<T>& k1, T h) {
  auto k2 = f(axpy(z, h / T(2), k1));
  auto k3 = f(axpy(z, h / T(2), k2));
  auto k4 = f(axpy(z, h, k3));
  auto sum = ad::add(ad::add(k1, ad::scale(k2, T(2))), ad::add(ad::scale(k3, T(2)), k4));
  return axpy(z, h / T(6), sum);
}

template <typename T>
BasicTensor<T> noise_tensor(BrownianPath& path, std::size_t k, const ad::Shape& shape) {
  const auto& dw = path.increment(k);
  return BasicTensor<T>::from(shape, std::vector<T>(dw.begin(), dw.end()));
}

template <typename T>
BasicTensor<T> checked_diffusion(const Field<T>& diffusion, const BasicTensor<T>& z) {
  auto s = diffusion(z);
  if (s.shape() != z.shape()) {
    throw ad::ShapeError("sde_solve: diffusion output " + ad::shape_str(s.shape()) + " does not match state " +
                         ad::shape_str(z.shape()));
  }
  return s;
}

void check_path(const SolverSpec& spec, const BrownianPath& path, std::size_t dims) {
  if (path.dims() != dims) {
    throw ad::ShapeError("sde_solve: brownian path has " + std::to_string(path.dims()) + " dims, state has " +
                         std::to_string(dims));
  }
  if (std::abs(path.h() - spec.h) > 1e-12) throw ConfigError("sde_solve: brownian path step differs from solver.h");
}

template <typename T>
struct HeunState {
  BasicTensor<T> y, yhat, mu, sigma;
};

template <typename T>
HeunState<T> heun_start(const Field<T>& drift, const Field<T>& diffusion, const BasicTensor<T>& z0) {
  return {z0, z0, drift(z0), checked_diffusion(diffusion, z0)};
}

template <typename T>
HeunState<T> heun_forward_step(const Field<T>& drift, const Field<T>& diffusion, const HeunState<T>& s, T h,
                               const BasicTensor<T>& dw) {
  HeunState<T> n;
  n.yhat = ad::add(ad::sub(ad::scale(s.y, T(2)), s.yhat), ad::add(ad::scale(s.mu, h), ad::mul(s.sigma, dw)));
  n.mu = drift(n.yhat);
  n.sigma = checked_diffusion(diffusion, n.yhat);
  auto dt_term = ad::scale(ad::add(s.mu, n.mu), h / T(2));
  auto dw_term = ad::scale(ad::mul(ad::add(s.sigma, n.sigma), dw), T(0.5));
  n.y = ad::add(s.y, ad::add(dt_term, dw_term));
  return n;
}

template <typename T>
HeunState<T> heun_backward_step(const Field<T>& drift, const Field<T>& diffusion, const HeunState<T>& s, T h,
                                const BasicTensor<T>& dw) {
  HeunState<T> p;
  p.yhat = ad::sub(ad::sub(ad::scale(s.y, T(2)), s.yhat), ad::add(ad::scale(s.mu, h), ad::mul(s.sigma, dw)));
  p.mu = drift(p.yhat);
  p.sigma = checked_diffusion(diffusion, p.yhat);
  auto dt_term = ad::scale(ad::add(s.mu, p.mu), h / T(2));
  auto dw_term = ad::scale(ad::mul(ad::add(s.sigma, p.sigma), dw), T(0.5));
  p.y = ad::sub(s.y, ad::add(dt_term, dw_term));
  return p;
}

}  // namespace

template <typename T>
std::vector<BasicTensor<T>> ode_solve(const Field<T>& field, const BasicTensor<T>& z0, std::size_t horizon,
                                      const SolverSpec& spec) {
  if (is_sde_method(spec.method)) throw ConfigError("ode_solve: " + to_string(spec.method) + " is an SDE method");
  if (horizon == 0) throw ad::ContractError("ode_solve: horizon must be at least 1");
  spec.validate();
  const std::size_t n = spec.substeps();
  const T h = static_cast<T>(spec.h);
  std::vector<BasicTensor<T>> out;
  out.reserve(horizon);
  BasicTensor<T> z = z0;
  std::vector<BasicTensor<T>> history;  // F_s, most recent last
  std::size_t step = 0;
  for (std::size_t frame = 0; frame < horizon; ++frame) {
    for (std::size_t s = 0; s < n; ++s, ++step) {
      auto fz = field(z);
      if (spec.method == SolverMethod::euler) {
        z = axpy(z, h, fz);
        continue;
      }
      history.push_back(fz);
      if (history.size() > 4) history.erase(history.begin());
      if (step < 3) {
        z = rk4_step(field, z, fz, h);
      } else {
        const auto& hs = history;  // {F_{n-3}, F_{n-2}, F_{n-1}, F_n}
        auto comb = ad::scale(hs[3], static_cast<T>(kAb4Coefficients[0]));
        comb = axpy(comb, static_cast<T>(kAb4Coefficients[1]), hs[2]);
        comb = axpy(comb, static_cast<T>(kAb4Coefficients[2]), hs[1]);
        comb = axpy(comb, static_cast<T>(kAb4Coefficients[3]), hs[0]);
        z = axpy(z, h, comb);
      }
    }
    out.push_back(z);
  }
  return out;
}

template <typename T>
std::vector<BasicTensor<T>> sde_solve(const Field<T>& drift, const Field<T>& diffusion, const BasicTensor<T>& z0,
                                      std::size_t horizon, const SolverSpec& spec, BrownianPath& path) {
  if (!is_sde_method(spec.method)) throw ConfigError("sde_solve: " + to_string(spec.method) + " is an ODE method");
  if (horizon == 0) throw ad::ContractError("sde_solve: horizon must be at least 1");
  spec.validate();
  check_path(spec, path, z0.size());
  const std::size_t n = spec.substeps();
  const T h = static_cast<T>(spec.h);
  std::vector<BasicTensor<T>> out;
  out.reserve(horizon);
  std::size_t step = 0;
  if (spec.method == SolverMethod::euler_maruyama_ito) {
    BasicTensor<T> z = z0;
    for (std::size_t frame = 0; frame < horizon; ++frame) {
      for (std::size_t s = 0; s < n; ++s, ++step) {
        auto dw = noise_tensor<T>(path, step, z0.shape());
        z = ad::add(axpy(z, h, drift(z)), ad::mul(checked_diffusion(diffusion, z), dw));
      }
      out.push_back(z);
    }
    return out;
  }
  auto state = heun_start(drift, diffusion, z0);
  for (std::size_t frame = 0; frame < horizon; ++frame) {
    for (std::size_t s = 0; s < n; ++s, ++step) {
      state = heun_forward_step(drift, diffusion, state, h, noise_tensor<T>(path, step, z0.shape()));
    }
    out.push_back(state.y);
  }
  return out;
}

template <typename T>
BasicTensor<T> reverse_heun_roundtrip(const Field<T>& drift, const Field<T>& diffusion, const BasicTensor<T>& z0,
                                      std::size_t horizon, const SolverSpec& spec, BrownianPath& path,
                                      BrownianPath* backward_path) {
  if (spec.method != SolverMethod::reversible_heun_stratonovich) {
    throw ConfigError("reverse_heun_roundtrip: requires the reversible-heun method");
  }
  spec.validate();
  check_path(spec, path, z0.size());
  BrownianPath& back = backward_path != nullptr ? *backward_path : path;
  check_path(spec, back, z0.size());
  const std::size_t steps = horizon * spec.substeps();
  const T h = static_cast<T>(spec.h);
  auto state = heun_start(drift, diffusion, z0);
  for (std::size_t k = 0; k < steps; ++k) {
    state = heun_forward_step(drift, diffusion, state, h, noise_tensor<T>(path, k, z0.shape()));
  }
  for (std::size_t k = steps; k-- > 0;) {
    state = heun_backward_step(drift, diffusion, state, h, noise_tensor<T>(back, k, z0.shape()));
  }
  return state.y;
}

#define SGA_INSTANTIATE_SOLVERS(T)                                                                           \
  template std::vector<BasicTensor<T>> ode_solve(const Field<T>&, const BasicTensor<T>&, std::size_t,        \
                                                 const SolverSpec&);                                         \
  template std::vector<BasicTensor<T>> sde_solve(const Field<T>&, const Field<T>&, const BasicTensor<T>&,    \
                                                 std::size_t, const SolverSpec&, BrownianPath&);             \
  template BasicTensor<T> reverse_heun_roundtrip(const Field<T>&, const Field<T>&, const BasicTensor<T>&,    \
                                                 std::size_t, const SolverSpec&, BrownianPath&, BrownianPath*);

SGA_INSTANTIATE_SOLVERS(float)
SGA_INSTANTIATE_SOLVERS(double)

#undef SGA_INSTANTIATE_SOLVERS

}  // namespace sga::dyn
