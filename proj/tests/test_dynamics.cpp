#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "sga/autodiff/ops.hpp"
#include "sga/dyn/solvers.hpp"
#include "sga/nn/layers.hpp"
#include "sga/util/errors.hpp"
#include "support/gradcheck.hpp"

using namespace sga;
using namespace sga::dyn;
using ad::Tensor;
using ad::Tensor64;

namespace {

Field<double> decay() {
  return [](const Tensor64& z) { return ad::scale(z, -1.0); };
}

double solve_decay(SolverMethod method, double h) {
  auto traj = ode_solve<double>(decay(), Tensor64::from({1, 1}, {1.0}), 1, {method, h});
  return traj.back().item();
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double std_error(const std::vector<double>& v) {
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / (v.size() - 1) / v.size());
}

template <typename T>
struct MlpFields {
  nn::ParameterStore<T> store;
  nn::Mlp<T> mu, sigma;
  MlpFields(std::uint64_t seed, std::size_t d) {
    Rng rng(seed);
    mu = nn::Mlp<T>(store, "mu", {d, 16, 16, d}, nn::Activation::tanh, rng);
    sigma = nn::Mlp<T>(store, "sigma", {d, 16, 16, d}, nn::Activation::tanh, rng);
  }
  Field<T> drift() const {
    return [this](const ad::BasicTensor<T>& z) { return mu(z); };
  }
  Field<T> diffusion() const {
    return [this](const ad::BasicTensor<T>& z) { return ad::scale(ad::tanh(sigma(z)), T(0.5)); };
  }
};

}  // namespace

TEST_CASE("zero field keeps the state constant") {
  Field<double> zero = [](const Tensor64& z) { return ad::scale(z, 0.0); };
  auto z0 = Tensor64::from({2, 2}, {1, -2, 3, 0.5});
  for (auto method : {SolverMethod::euler, SolverMethod::adams_bashforth4}) {
    auto traj = ode_solve<double>(zero, z0, 3, {method, 1.0 / 25});
    REQUIRE(traj.size() == 3);
    for (const auto& z : traj) CHECK(z.to_vector() == z0.to_vector());
  }
}

TEST_CASE("exponential decay over one frame") {
  CHECK(solve_decay(SolverMethod::euler, 1.0 / 25) == doctest::Approx(std::pow(1.0 - 1.0 / 25, 25)).epsilon(1e-12));
  CHECK(solve_decay(SolverMethod::euler, 1.0 / 25) == doctest::Approx(0.3604).epsilon(1e-4));
  CHECK(std::abs(solve_decay(SolverMethod::adams_bashforth4, 1.0 / 25) - std::exp(-1.0)) < 1e-5);
}

TEST_CASE("one euler step with h = 1 is z0 + f(z0)") {
  auto traj = ode_solve<double>(decay(), Tensor64::from({1, 1}, {2.0}), 1, {SolverMethod::euler, 1.0});
  CHECK(traj[0].item() == 0.0);
}

TEST_CASE("adams-bashforth integrates cubics exactly") {
  for (double tn : {0.0, 0.7, 1.3}) {
    for (double h : {0.1, 0.25}) {
      std::array<double, 4> history{};
      for (std::size_t j = 0; j < 4; ++j) history[j] = std::pow(tn - j * h, 3);
      const double exact = (std::pow(tn + h, 4) - std::pow(tn, 4)) / 4.0;
      CHECK(ab4_increment(h, history) == doctest::Approx(exact).epsilon(1e-13));
    }
  }
}

TEST_CASE("convergence orders on exponential decay") {
  const double exact = std::exp(-1.0);
  const std::vector<double> hs{1.0 / 25, 1.0 / 50, 1.0 / 100};
  for (auto [method, lo, hi] : {std::tuple{SolverMethod::euler, 1.8, 2.2},
                                std::tuple{SolverMethod::adams_bashforth4, 12.0, 20.0}}) {
    std::vector<double> err;
    for (double h : hs) err.push_back(std::abs(solve_decay(method, h) - exact));
    for (std::size_t i = 0; i + 1 < err.size(); ++i) {
      const double factor = err[i] / err[i + 1];
      CHECK(factor >= lo);
      CHECK(factor <= hi);
    }
  }
}

TEST_CASE("solver configuration errors") {
  CHECK_THROWS_AS(ode_solve<double>(decay(), Tensor64::from({1, 1}, {1.0}), 1, {SolverMethod::adams_bashforth4, 1.0}),
                  ConfigError);
  CHECK_THROWS_AS(ode_solve<double>(decay(), Tensor64::from({1, 1}, {1.0}), 1, {SolverMethod::euler, 0.3}),
                  ConfigError);
  CHECK_THROWS_AS(ode_solve<double>(decay(), Tensor64::from({1, 1}, {1.0}), 1, {SolverMethod::euler_maruyama_ito, 0.1}),
                  ConfigError);
  CHECK_THROWS_AS(parse_solver_method("midpoint"), ConfigError);
  CHECK(parse_solver_method("reversible-heun") == SolverMethod::reversible_heun_stratonovich);
  BrownianPath path(1, 0.1, 3);
  auto z0 = Tensor64::from({1, 2}, {1.0, 1.0});
  CHECK_THROWS_AS(sde_solve<double>(decay(), decay(), z0, 1, {SolverMethod::euler_maruyama_ito, 0.1}, path),
                  ad::ShapeError);
  BrownianPath wrong_step(1, 0.05, 2);
  CHECK_THROWS_AS(sde_solve<double>(decay(), decay(), z0, 1, {SolverMethod::euler_maruyama_ito, 0.1}, wrong_step),
                  ConfigError);
}

TEST_CASE("brownian increments are reproducible with variance h") {
  BrownianPath a(5, 0.01, 20000), b(5, 0.01, 20000);
  CHECK(a.increment(3) == b.increment(3));
  CHECK(a.increment(3) != a.increment(4));
  const auto& dw = a.increment(7);
  double ss = 0.0;
  for (double x : dw) ss += x * x;
  const double var = ss / dw.size();
  // Sample variance of N(0, h): standard error h * sqrt(2/n).
  CHECK(std::abs(var - 0.01) < 3.0 * 0.01 * std::sqrt(2.0 / dw.size()));
  // A coarse path is the sum of the fine one.
  BrownianPath fine(9, 0.005, 4), coarse(9, 0.01, 4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(coarse.increment(1)[i] == doctest::Approx(fine.increment(2)[i] + fine.increment(3)[i]));
  }
}

TEST_CASE("zero diffusion reduces stochastic solvers to deterministic ones") {
  Field<double> zero = [](const Tensor64& z) { return ad::scale(z, 0.0); };
  auto z0 = Tensor64::from({1, 1}, {1.0});
  BrownianPath path(3, 1.0 / 25, 1);
  auto em = sde_solve<double>(decay(), zero, z0, 2, {SolverMethod::euler_maruyama_ito, 1.0 / 25}, path);
  auto eu = ode_solve<double>(decay(), z0, 2, {SolverMethod::euler, 1.0 / 25});
  CHECK(em[0].item() == eu[0].item());
  CHECK(em[1].item() == eu[1].item());
  // Reversible Heun without noise is a second-order deterministic scheme.
  auto rh = sde_solve<double>(decay(), zero, z0, 1, {SolverMethod::reversible_heun_stratonovich, 1.0 / 25}, path);
  CHECK(std::abs(rh[0].item() - std::exp(-1.0)) < 1e-3);
}

TEST_CASE("geometric brownian motion moments under both interpretations") {
  const std::size_t paths = 10000;
  const double mu = 0.05, sigma = 0.2, h = 1.0 / 100;
  Field<double> drift = [mu](const Tensor64& z) { return ad::scale(z, mu); };
  Field<double> diffusion = [sigma](const Tensor64& z) { return ad::scale(z, sigma); };
  auto z0 = Tensor64::full({paths, 1}, 1.0);

  BrownianPath ito_path(2024, h, paths);
  auto ito = sde_solve<double>(drift, diffusion, z0, 1, {SolverMethod::euler_maruyama_ito, h}, ito_path);
  auto zi = ito[0].to_vector();
  CHECK(std::abs(mean(zi) - std::exp(0.05)) < 3.0 * std_error(zi));

  BrownianPath strat_path(2025, h, paths);
  auto strat =
      sde_solve<double>(drift, diffusion, z0, 1, {SolverMethod::reversible_heun_stratonovich, h}, strat_path);
  auto zs = strat[0].to_vector();
  CHECK(std::abs(mean(zs) - std::exp(0.07)) < 3.0 * std_error(zs));
  // The interpretations are distinguishable at this sample size.
  CHECK(std::abs(mean(zs) - mean(zi)) > 3.0 * std_error(zs));
}

TEST_CASE("euler-maruyama strong convergence has order one half") {
  const std::size_t paths = 4000;
  const double mu = 0.05, sigma = 0.2;
  Field<double> drift = [mu](const Tensor64& z) { return ad::scale(z, mu); };
  Field<double> diffusion = [sigma](const Tensor64& z) { return ad::scale(z, sigma); };
  auto z0 = Tensor64::full({paths, 1}, 1.0);
  const double finest = 1.0 / 200;
  std::vector<double> log_h, log_err;
  for (std::size_t refine : {8, 4, 2, 1}) {
    const double h = finest * refine;
    BrownianPath path(77, h, paths, refine);
    auto z1 = sde_solve<double>(drift, diffusion, z0, 1, {SolverMethod::euler_maruyama_ito, h}, path)[0].to_vector();
    const auto w1 = path.value_at(static_cast<std::size_t>(std::llround(1.0 / h)));
    double ss = 0.0;
    for (std::size_t i = 0; i < paths; ++i) {
      const double exact = std::exp(mu - 0.5 * sigma * sigma + sigma * w1[i]);
      ss += (z1[i] - exact) * (z1[i] - exact);
    }
    log_h.push_back(std::log(h));
    log_err.push_back(0.5 * std::log(ss / paths));
  }
  const double mx = mean(log_h), my = mean(log_err);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < log_h.size(); ++i) {
    num += (log_h[i] - mx) * (log_err[i] - my);
    den += (log_h[i] - mx) * (log_h[i] - mx);
  }
  const double slope = num / den;
  CHECK(slope >= 0.4);
  CHECK(slope <= 0.6);
}

TEST_CASE("reversible heun roundtrip reconstructs the initial state") {
  const SolverSpec spec{SolverMethod::reversible_heun_stratonovich, 1.0 / 25};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    MlpFields<float> fields(seed, 6);
    Rng rng(seed + 100);
    std::vector<float> init(4 * 6);
    for (auto& v : init) v = static_cast<float>(rng.uniform(-1, 1));
    auto z0 = Tensor::from({4, 6}, init);
    BrownianPath path(seed, spec.h, z0.size());
    auto back = reverse_heun_roundtrip<float>(fields.drift(), fields.diffusion(), z0, 1, spec, path);
    double max_err = 0.0;
    for (std::size_t i = 0; i < init.size(); ++i) max_err = std::max(max_err, std::abs(double(back.at(i)) - init[i]));
    CHECK(max_err < 1e-5);

    BrownianPath other(seed + 999, spec.h, z0.size());
    auto wrong = reverse_heun_roundtrip<float>(fields.drift(), fields.diffusion(), z0, 1, spec, path, &other);
    double wrong_err = 0.0;
    for (std::size_t i = 0; i < init.size(); ++i) wrong_err = std::max(wrong_err, std::abs(double(wrong.at(i)) - init[i]));
    CHECK(wrong_err > 1e-2);
  }
  Field<float> zero = [](const Tensor& z) { return ad::scale(z, 0.f); };
  auto z0 = Tensor::from({1, 3}, {0.3f, -0.2f, 1.0f});
  BrownianPath path(1, spec.h, 3);
  CHECK(reverse_heun_roundtrip<float>(zero, zero, z0, 2, spec, path).to_vector() == z0.to_vector());
}

TEST_CASE("rows evolve independently and stochastic solves are reproducible") {
  MlpFields<float> fields(4, 5);
  Rng rng(8);
  std::vector<float> init(2 * 5);
  for (auto& v : init) v = static_cast<float>(rng.uniform(-1, 1));
  auto both = Tensor::from({2, 5}, init);
  auto zeroed_a = init;
  std::fill(zeroed_a.begin(), zeroed_a.begin() + 5, 0.f);
  for (auto method : {SolverMethod::euler, SolverMethod::adams_bashforth4}) {
    auto a = ode_solve<float>(fields.drift(), both, 2, {method, 1.0 / 25});
    auto b = ode_solve<float>(fields.drift(), Tensor::from({2, 5}, zeroed_a), 2, {method, 1.0 / 25});
    for (std::size_t i = 5; i < 10; ++i) CHECK(a[1].at(i) == b[1].at(i));
  }
  for (auto method : {SolverMethod::euler_maruyama_ito, SolverMethod::reversible_heun_stratonovich}) {
    BrownianPath p1(11, 1.0 / 25, 10), p2(11, 1.0 / 25, 10);
    auto a = sde_solve<float>(fields.drift(), fields.diffusion(), both, 2, {method, 1.0 / 25}, p1);
    auto b = sde_solve<float>(fields.drift(), fields.diffusion(), both, 2, {method, 1.0 / 25}, p2);
    CHECK(a[1].to_vector() == b[1].to_vector());
  }
}

TEST_CASE("gradients through unrolled solvers match finite differences") {
  for (auto method : {SolverMethod::euler, SolverMethod::adams_bashforth4, SolverMethod::euler_maruyama_ito,
                      SolverMethod::reversible_heun_stratonovich}) {
    CAPTURE(to_string(method));
    MlpFields<double> fields(13, 3);
    Rng rng(14);
    std::vector<double> init(2 * 3);
    for (auto& v : init) v = rng.uniform(-1, 1);
    std::vector<Tensor64> inputs{Tensor64::from({2, 3}, init)};
    for (const auto& t : fields.store.tensors()) inputs.push_back(t);
    const SolverSpec spec{method, 1.0 / 3};
    auto loss = [&](const std::vector<Tensor64>& in) {
      std::vector<Tensor64> traj;
      if (is_sde_method(method)) {
        BrownianPath path(15, spec.h, 6);
        traj = sde_solve<double>(fields.drift(), fields.diffusion(), in[0], 1, spec, path);
      } else {
        traj = ode_solve<double>(fields.drift(), in[0], 1, spec);
      }
      return ad::reduce_sum(ad::mul(traj.back(), traj.back()));
    };
    auto result = testing::gradcheck(loss, inputs, 1e-5, 24);
    CHECK(result.max_rel_error < 1e-3);
  }
}
