#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "models.hpp"
#include "wkam/model.hpp"

using namespace wkam;
using namespace wkam::testing;

namespace {
double L(const LagrangianSpec& s, double x, double v, double t) {
  const double xs[1] = {x}, vs[1] = {v};
  return eval_lagrangian(s, xs, vs, t);
}
double H(const LagrangianSpec& s, double x, double p, double t) {
  const double xs[1] = {x};
  return eval_hamiltonian(s, xs, Covector{{p}}, t);
}
}  // namespace

TEST_CASE("lagrangian closed forms") {
  CHECK(L(free_particle(), 0.3, 1.0, 0.0) == doctest::Approx(0.5));
  CHECK(L(pendulum(), 0.0, 0.0, 0.0) == doctest::Approx(-1.0));
  for (double t : {0.0, 0.1, 0.25, 0.7}) {
    CHECK(L(drift(), 0.42, std::sin(2 * std::numbers::pi * t), t) == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("hamiltonian closed forms") {
  CHECK(H(free_particle(), 0.0, 1.0, 0.0) == doctest::Approx(0.5));
  CHECK(H(pendulum(), 0.0, 0.0, 0.0) == doctest::Approx(1.0));
  CHECK(H(drift(), 0.3, 1.0, 0.25) == doctest::Approx(1.5));
}

TEST_CASE("legendre maps") {
  const double x[1] = {0.1};
  const double v[1] = {0.3};
  CHECK(velocity_to_momentum(free_particle(), x, v, 0.0).p[0] == doctest::Approx(0.3));
  CHECK(momentum_to_velocity(drift(), x, Covector{{0.0}}, 0.25)[0] == doctest::Approx(1.0));
  const double w[1] = {-2.0};
  const auto p = velocity_to_momentum(pendulum(), x, w, 0.0);
  CHECK(p.p[0] == doctest::Approx(-2.0));
  CHECK(momentum_to_velocity(pendulum(), x, p, 0.0)[0] == doctest::Approx(-2.0));
}

TEST_CASE("fenchel inequality and equality at the legendre point") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0), sym(-3.0, 3.0);
  for (auto spec : {free_particle(), pendulum(), drift(), forced_pendulum(),
                    pendulum().with_cohomology({0.4})}) {
    double worst_gap = 0.0;
    bool ineq = true;
    for (int i = 0; i < 1000; ++i) {
      const double x[1] = {u(rng)};
      const double t = u(rng);
      const Covector p{{sym(rng)}};
      const double h = eval_hamiltonian(spec, x, p, t);
      for (int j = 0; j < 1000; ++j) {
        const double v[1] = {sym(rng)};
        if (h < p.p[0] * v[0] - eval_lagrangian(spec, x, v, t) - 1e-12) ineq = false;
      }
      const auto v = momentum_to_velocity(spec, x, p, t);
      worst_gap = std::max(worst_gap, std::abs(h - (p.p[0] * v[0] - eval_lagrangian(spec, x, v, t))));
      const auto back = velocity_to_momentum(spec, x, v, t);
      CHECK(std::abs(back.p[0] - p.p[0]) <= 1e-12);
    }
    CHECK(ineq);
    CHECK(worst_gap <= 1e-8);
  }
}

TEST_CASE("hamiltonian matches sampled sup of p v - L") {
  const double x[1] = {0.37};
  for (auto spec : {pendulum(), drift()}) {
    for (double p : {-1.3, 0.0, 0.8}) {
      double best = -1e300;
      for (int j = -200000; j <= 200000; ++j) {
        const double v[1] = {j * 2e-5};
        best = std::max(best, p * v[0] - eval_lagrangian(spec, x, v, 0.6));
      }
      CHECK(std::abs(best - eval_hamiltonian(spec, x, Covector{{p}}, 0.6)) <= 1e-9);
    }
  }
}

TEST_CASE("time periodicity") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0), sym(-2.0, 2.0);
  for (auto spec : {drift(), forced_pendulum()}) {
    for (int i = 0; i < 1000; ++i) {
      const double x[1] = {u(rng)}, v[1] = {sym(rng)};
      const double t = u(rng);
      CHECK(std::abs(eval_lagrangian(spec, x, v, t) - eval_lagrangian(spec, x, v, t + 1.0)) <= 1e-12);
    }
  }
}

TEST_CASE("phase point normalization") {
  PhasePoint p{{1.25, -0.25}, {0.0, 0.0}, -0.5};
  p.normalize();
  CHECK(p.x[0] == doctest::Approx(0.25));
  CHECK(p.x[1] == doctest::Approx(0.75));
  CHECK(p.t == doctest::Approx(0.5));
}

TEST_CASE("spec validation") {
  auto bad = pendulum();
  bad.potential.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(family_from_string("quartic"), ConfigError);
  CHECK_THROWS_AS(pendulum().with_cohomology({1.0, 2.0}), ConfigError);
  CHECK(family_from_string("forced_mechanical") == Family::forced_mechanical);
}

TEST_CASE("default velocity cap") {
  CHECK(default_velocity_cap(free_particle()) == doctest::Approx(2.0));
  CHECK(default_velocity_cap(pendulum()) == doctest::Approx(2.0 * (1.0 + std::sqrt(2.0))));
  CHECK(default_velocity_cap(drift()) == doctest::Approx(4.0).epsilon(1e-3));
}
