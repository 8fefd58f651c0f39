#include <cmath>
#include <random>

#include "doctest.h"
#include "models.hpp"
#include "wkam/critical.hpp"
#include "wkam/oracle.hpp"
#include "wkam/weakkam.hpp"

using namespace wkam;
using namespace wkam::testing;

namespace {

struct Setup {
  LagrangianSpec spec;
  Lattice lattice;
  double c = 0.0;
  StepKernel kernel;
  BarrierTable table;
};

Setup setup(const LagrangianSpec& s, int n, int t) {
  Setup out;
  out.spec = s;
  out.lattice = build_lattice({n, t, default_velocity_cap(s), s.dim});
  const auto k0 = build_step_kernel(s, out.lattice, 0.0);
  out.c = critical_value(s, k0).c_est;
  out.kernel = k0.with_offset(out.c);
  BarrierOptions o;
  o.min_periods = 64;
  o.window_periods = 8;
  out.table = BarrierTable::compute(out.kernel, o, {true, {}, {}});
  return out;
}

}  // namespace

TEST_CASE("lax-oleinik: constants are fixed for the free particle") {
  const auto lat = build_lattice({8, 4, 2.0, 1});
  const auto k = build_step_kernel(free_particle(), lat, 0.0);
  const ValueFunction u{std::vector<double>(32, 1.5), SolutionKind::generic};
  CHECK(lax_oleinik(u, k, Direction::backward, 4).values == u.values);
  CHECK(lax_oleinik(u, k, Direction::forward, 4).values == u.values);
  CHECK_THROWS_AS(lax_oleinik(u, k, Direction::backward, 0), std::invalid_argument);
}

TEST_CASE("lax-oleinik is min-plus linear") {
  const auto lat = build_lattice({8, 4, 3.0, 1});
  const auto k = build_step_kernel(pendulum(), lat, 1.0);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  ValueFunction a{std::vector<double>(32)}, b{std::vector<double>(32)}, m{std::vector<double>(32)};
  for (int i = 0; i < 32; ++i) {
    a.values[i] = d(rng);
    b.values[i] = d(rng);
    m.values[i] = std::min(a.values[i], b.values[i]) + 0.25;
  }
  const auto ta = lax_oleinik(a, k, Direction::backward, 3);
  const auto tb = lax_oleinik(b, k, Direction::backward, 3);
  const auto tm = lax_oleinik(m, k, Direction::backward, 3);
  for (int i = 0; i < 32; ++i) {
    CHECK(tm.values[i] == doctest::Approx(std::min(ta.values[i], tb.values[i]) + 0.25).epsilon(1e-14));
  }
}

TEST_CASE("pendulum backward solution from the top") {
  const auto s = setup(pendulum(), 32, 8);
  const std::vector<BoundaryValue> f{{0, 0.0}};
  const auto u = build_backward_solution(f, s.table, 1e-9);
  CHECK(u.kind == SolutionKind::backward);
  CHECK(u.values[0] == doctest::Approx(0.0).epsilon(1e-12));
  for (int c = 0; c < 32; ++c) {
    CHECK(std::abs(u.values[c] - oracle::pendulum_potential(c / 32.0)) < 0.02);
  }
  VerifyOptions vo;
  vo.c = s.c;
  const auto r = verify_solution(u, s.kernel, s.table, s.spec, vo);
  CHECK(r.domination_defect <= 1e-9);
  CHECK(r.domination_pairs == 256LL * 256);
  CHECK(r.fixed_point_residual <= 1e-9);
  CHECK(r.hj_median < 0.05);
  CHECK(r.graph_defect == 0.0);
  CHECK(r.lipschitz_constant < std::sqrt(2.0) + 0.2);

  const auto path = extract_calibrated_path(u, s.kernel, s.lattice.node(8, 3), 5);
  CHECK(path.nodes.size() == 41);
  CHECK(path.defect <= 1e-9);
  CHECK(s.lattice.cell_of(path.nodes.back()) == 0);
}

TEST_CASE("forward solution and forward calibrated path") {
  const auto s = setup(pendulum(), 16, 4);
  const std::vector<BoundaryValue> f{{0, 0.0}};
  const auto v = build_forward_solution(f, s.table, 1e-9);
  CHECK(v.kind == SolutionKind::forward);
  CHECK(fixed_point_residual(v, s.kernel) <= 1e-9);
  for (Node n = 0; n < s.lattice.node_count(); ++n) CHECK(v.values[n] == doctest::Approx(-s.table.h(n, 0)));
  const auto path = extract_calibrated_path(v, s.kernel, s.lattice.node(5, 1), 3, Direction::forward);
  CHECK(path.defect <= 1e-9);
}

TEST_CASE("two-well: solutions restrict to their boundary data") {
  const auto s = setup(two_well(), 32, 8);
  const Node p = 0, q = s.lattice.node(16, 0);
  const double delta = 0.5 * s.table.phi(p, q);
  const std::vector<BoundaryValue> f{{p, 0.0}, {q, delta}};
  const auto u = build_backward_solution(f, s.table, 1e-9);
  CHECK(u.values[p] == doctest::Approx(0.0));
  CHECK(u.values[q] == doctest::Approx(delta));
  CHECK(fixed_point_residual(u, s.kernel) <= 1e-9);

  // Min of the single-class solutions equals the two-point solution.
  const std::vector<BoundaryValue> fp{{p, 0.0}}, fq{{q, delta}};
  const std::vector<ValueFunction> parts{build_backward_solution(fp, s.table, 1e-9),
                                         build_backward_solution(fq, s.table, 1e-9)};
  CHECK(min_combine(parts).values == u.values);
  CHECK_THROWS_AS(min_combine(std::span<const ValueFunction>{}), std::invalid_argument);
}

TEST_CASE("non-dominated boundary data is rejected") {
  const auto s = setup(two_well(), 16, 4);
  const Node p = 0, q = s.lattice.node(8, 0);
  const double too_big = s.table.phi(p, q) + 0.1;
  const std::vector<BoundaryValue> f{{p, 0.0}, {q, too_big}};
  try {
    build_backward_solution(f, s.table, 1e-9);
    FAIL("expected DominationError");
  } catch (const DominationError& e) {
    CHECK(e.p == p);
    CHECK(e.q == q);
    CHECK(e.excess == doctest::Approx(0.1));
  }
  CHECK_THROWS_AS(build_backward_solution(std::vector<BoundaryValue>{}, s.table, 1e-9), std::invalid_argument);
}

TEST_CASE("barrier rows and columns are solutions") {
  const auto s = setup(forced_pendulum(), 16, 4);
  for (Node z : {0, 4, 17}) {
    const auto r = barrier_is_solution_check(z, s.table, s.kernel);
    CHECK(r.backward <= 1e-9);
    CHECK(r.forward <= 1e-9);
  }
}

TEST_CASE("hj residual vanishes on an exact classical solution") {
  // u = 0 solves H(x, 0, t) = c for the free particle with c = 0.
  const auto lat = build_lattice({8, 4, 1.0, 1});
  const ValueFunction u{std::vector<double>(32, 0.0)};
  const auto r = hj_residual(u, lat, free_particle(), 0.0);
  CHECK(r.max == 0.0);
  CHECK(to_string(SolutionKind::forward) == "forward");
}
