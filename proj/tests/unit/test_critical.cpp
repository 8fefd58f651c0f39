#include <cmath>

#include "doctest.h"
#include "models.hpp"
#include "wkam/critical.hpp"
#include "wkam/oracle.hpp"

using namespace wkam;
using namespace wkam::testing;

namespace {

Lattice lattice_for(const LagrangianSpec& s, int n, int t = 16) {
  return build_lattice({n, t, default_velocity_cap(s), s.dim});
}

}  // namespace

TEST_CASE("free particle: critical value zero on a rest cycle") {
  const auto s = free_particle();
  const auto r = critical_value(s, lattice_for(s, 32));
  CHECK(r.c_est == 0.0);
  CHECK(r.period_steps == 16);
  CHECK(r.measure_action == 0.0);
  double mass = 0.0;
  for (const auto& a : r.measure) {
    mass += a.weight;
    CHECK(a.velocity[0] == 0.0);
  }
  CHECK(mass == doctest::Approx(1.0));
}

TEST_CASE("pendulum: critical value is max V, measure sits at the top") {
  const auto s = pendulum();
  const auto lat = lattice_for(s, 64);
  for (auto method : {CycleMethod::karp, CycleMethod::howard}) {
    const auto r = critical_value(s, lat, method);
    CHECK(r.c_est == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.measure_action == doctest::Approx(-r.c_est).epsilon(1e-12));
    for (const auto& a : r.measure) CHECK(a.node.cell[0] == 0);
  }
}

TEST_CASE("two-well and forced pendulum share the critical value 1") {
  for (const auto& s : {two_well(), forced_pendulum()}) {
    const auto r = critical_value(s, lattice_for(s, 32));
    CHECK(r.c_est == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("drift: discrete critical value approaches zero under refinement") {
  const auto s = drift();
  double previous = 1.0;
  for (int n : {32, 64, 128}) {
    const auto r = critical_value(s, lattice_for(s, n));
    CHECK(std::abs(r.c_est) < previous);
    CHECK(std::abs(r.c_est) <= 0.01);
    CHECK(r.measure_action == doctest::Approx(-r.c_est).epsilon(1e-9));
    previous = std::abs(r.c_est);
  }
}

TEST_CASE("critical value is consistent across energy offsets") {
  const auto s = pendulum();
  const auto lat = lattice_for(s, 32);
  const auto k0 = build_step_kernel(s, lat, 0.0);
  const auto c = critical_value(s, k0).c_est;
  for (double k : {-0.5, 0.25, 2.0}) {
    const auto mean = min_mean_cycle(k0.with_offset(k)).mean;
    CHECK(-16 * mean + k == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("measure action matches a direct evaluation of L") {
  const auto s = forced_pendulum();
  const auto r = critical_value(s, lattice_for(s, 32));
  double avg = 0.0;
  for (const auto& a : r.measure) avg += a.weight * eval_lagrangian(s, a.position, a.velocity, a.time);
  CHECK(avg == doctest::Approx(r.measure_action).epsilon(1e-9));
}

TEST_CASE("alpha of the free particle is |h|^2/2 on representable slopes") {
  const auto s = free_particle();
  const std::vector<std::vector<double>> hs{{-0.5}, {-0.25}, {0.0}, {0.25}, {0.5}, {1.0}};
  const auto a = alpha_function(s, lattice_for(s, 64), hs);
  REQUIRE(a.size() == hs.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].alpha == doctest::Approx(0.5 * hs[i][0] * hs[i][0]).epsilon(1e-12));
  }
  CHECK(alpha_convexity_violation(a) <= 1e-12);
}

TEST_CASE("alpha convexity violation detects a concave kink") {
  std::vector<AlphaSample> fake{{{-1.0}, 0.0}, {{0.0}, 1.0}, {{1.0}, 0.0}};
  CHECK(alpha_convexity_violation(fake) == doctest::Approx(1.0));
}

TEST_CASE("subsolution test brackets the critical value") {
  for (const auto& s : {free_particle(), pendulum(), drift()}) {
    const auto lat = lattice_for(s, 16, 8);
    const auto c = critical_value(s, lat).c_est;
    const int iters = 4 * lat.node_count();
    CHECK(subsolution_test(s, lat, c + 0.05, iters) == Feasibility::feasible);
    CHECK(subsolution_test(s, lat, c - 0.05, iters) == Feasibility::infeasible);
  }
  const auto lat = lattice_for(free_particle(), 16, 8);
  CHECK_THROWS_AS(subsolution_test(free_particle(), lat, 0.0, 3), std::invalid_argument);
  CHECK(to_string(Feasibility::inconclusive) == "inconclusive");
}

TEST_CASE("mane potential oracle agrees with the closed form") {
  const auto s = pendulum();
  for (double x : {0.0, 0.1, 0.3, 0.5, 0.77}) {
    CHECK(oracle::mane_potential(s, 1.0, 0.0, x) ==
          doctest::Approx(oracle::pendulum_potential(x)).epsilon(1e-9));
  }
}
