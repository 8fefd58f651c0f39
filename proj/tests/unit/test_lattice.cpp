#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "models.hpp"
#include "wkam/lattice.hpp"
#include "wkam/minplus.hpp"
#include "wkam/parallel.hpp"

using namespace wkam;
using namespace wkam::testing;

TEST_CASE("lattice counts and radius") {
  const auto lat = build_lattice({4, 2, 1.0, 1});
  CHECK(lat.node_count() == 8);
  CHECK(LatticeSpec{4, 2, 4.0, 1}.radius() == 8);
  // v_max N / T = 0.025 still rounds up to one reachable cell.
  CHECK(LatticeSpec{4, 16, 0.1, 1}.radius() == 1);
  CHECK_NOTHROW(build_lattice({4, 16, 0.1, 1}));
  CHECK_THROWS_WITH_AS(build_lattice({4, 2, 0.0, 1}), doctest::Contains("disconnected lattice"),
                       ConfigError);
  CHECK_THROWS_AS(build_lattice({3, 2, 1.0, 1}), ConfigError);
  CHECK_THROWS_AS(build_lattice({4, 1, 1.0, 1}), ConfigError);
}

TEST_CASE("node encoding is a bijection with lexicographic cell order") {
  const auto lat = build_lattice({5, 3, 1.0, 2});
  CHECK(lat.node_count() == 75);
  for (Node n = 0; n < lat.node_count(); ++n) {
    const auto id = lat.node_id(n);
    CHECK(lat.node(id) == n);
  }
  CHECK(lat.node_id(lat.node(7, 1)).cell == std::vector<int>{1, 2});
  const std::vector<int> shift{-1, 4};
  CHECK(lat.shifted_cell(lat.flat_cell(std::vector<int>{0, 3}), shift) ==
        lat.flat_cell(std::vector<int>{4, 2}));
  CHECK(lat.reversed(lat.node(2, 1)) == lat.node(2, 2));
  CHECK(lat.reversed(lat.node(2, 0)) == lat.node(2, 0));
}

TEST_CASE("step weight examples") {
  const auto spec = free_particle();
  const auto lat = build_lattice({4, 4, 2.0, 1});
  CHECK(step_weight(spec, lat, 0, 1, 0, 0.0).weight == doctest::Approx(0.125));
  CHECK(step_weight(spec, lat, 2, 2, 3, 0.0).weight == 0.0);
  CHECK(step_weight(spec, lat, 0, 0, 0, 2.0).weight == doctest::Approx(0.5));
  // The min-weight lift of a half-turn displacement is either direction.
  CHECK(std::abs(step_weight(spec, lat, 0, 2, 0, 0.0).lift[0]) == 2);
}

TEST_CASE("kernel edge counts") {
  const auto k = build_step_kernel(free_particle(), build_lattice({4, 2, 0.5, 1}), 0.0);
  CHECK(k.lattice().radius() == 1);
  CHECK(k.graph().edge_count() == 24);
  const auto k2 = build_step_kernel(free_particle(2), build_lattice({6, 3, 0.5, 2}), 0.0);
  CHECK(k2.graph().edge_count() == 36 * 3 * 9);
  // Radius larger than the torus: every target once, with its best lift.
  const auto k3 = build_step_kernel(free_particle(), build_lattice({4, 2, 4.0, 1}), 0.0);
  CHECK(k3.graph().edge_count() == 8 * 4);
}

TEST_CASE("free kernel minimum is zero on rest edges") {
  const auto k = build_step_kernel(free_particle(), build_lattice({8, 4, 2.0, 1}), 0.0);
  const auto& g = k.graph();
  double lo = kInfinity;
  for (double w : g.weights()) lo = std::min(lo, w);
  CHECK(lo == 0.0);
  for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
    if (g.weight(e) == 0.0) CHECK(k.lift(e)[0] == 0);
  }
}

TEST_CASE("offset law is exact in the stored base weights") {
  const auto lat = build_lattice({16, 8, 3.0, 1});
  const auto k0 = build_step_kernel(pendulum(), lat, 0.0);
  const auto k1 = build_step_kernel(pendulum(), lat, 1.0);
  const auto kh = k0.with_offset(-0.5);
  REQUIRE(k0.graph().edge_count() == k1.graph().edge_count());
  double worst = 0.0;
  for (EdgeIndex e = 0; e < k0.graph().edge_count(); ++e) {
    CHECK(k0.base_weight(e) == k1.base_weight(e));
    worst = std::max(worst, std::abs(k1.weight(e) - k0.weight(e) - 1.0 / 8));
    CHECK(kh.weight(e) == k0.base_weight(e) + (-0.5) / 8);
  }
  CHECK(worst <= 1e-15);
  CHECK(k1 == k0.with_offset(1.0));
}

TEST_CASE("free kernel reversal symmetry") {
  const auto lat = build_lattice({12, 4, 3.0, 1});
  const auto k = build_step_kernel(free_particle(), lat, 0.0);
  const auto& g = k.graph();
  for (int j = 0; j < 4; ++j) {
    for (int x = 0; x < 12; ++x) {
      for (int y = 0; y < 12; ++y) {
        const auto a = g.find_edge(lat.node(x, j), lat.node(y, (j + 1) % 4));
        const auto b = g.find_edge(lat.node(y, j), lat.node(x, (j + 1) % 4));
        REQUIRE((a < 0) == (b < 0));
        if (a >= 0) CHECK(g.weight(a) == g.weight(b));
      }
    }
  }
}

TEST_CASE("two-step refinement for the free particle") {
  // Rest paths cost nothing; moving half a turn in two steps costs exactly
  // the continuum action (1/2)^2 / (2 * 2/T) = T/16, so it grows as T doubles.
  double previous = 0.0;
  for (int t : {4, 8, 16}) {
    const auto lat = build_lattice({16, t, 8.0, 1});
    const auto k = build_step_kernel(free_particle(), lat, 0.0);
    const auto rest = m_step_costs(k, lat.node(0, 0), 2);
    CHECK(rest.costs[lat.node(0, 2 % t)] == 0.0);
    const double half = rest.costs[lat.node(8, 2 % t)];
    CHECK(half == doctest::Approx(t / 16.0));
    CHECK(half > previous);
    previous = half;
  }
}

TEST_CASE("memory cap refusal") {
  const auto lat = build_lattice({64, 16, 5.0, 1});
  CHECK(estimate_kernel_bytes(lat) > 1000);
  CHECK_THROWS_WITH_AS(build_step_kernel(pendulum(), lat, 0.0, 1000), doctest::Contains("memory"),
                       ConfigError);
}

TEST_CASE("kernel construction is independent of the worker count") {
  const auto lat = build_lattice({32, 8, 4.0, 1});
  set_thread_count(1);
  const auto a = build_step_kernel(forced_pendulum(), lat, 0.25);
  set_thread_count(8);
  const auto b = build_step_kernel(forced_pendulum(), lat, 0.25);
  set_thread_count(1);
  CHECK(a == b);
}

TEST_CASE("kernel cache round trip and corruption") {
  const auto dir = std::filesystem::temp_directory_path() / "wkam_unit_cache";
  std::filesystem::create_directories(dir);
  const auto file = dir / "k.bin";
  const auto lat = build_lattice({12, 4, 3.0, 1});
  const auto k = build_step_kernel(drift(), lat, 0.5);
  save_kernel(file, k, "abc123");
  std::string hash;
  const auto back = load_kernel(file, &hash);
  CHECK(hash == "abc123");
  CHECK(back == k);
  CHECK(load_kernel(file).reversed() == k.reversed());
  {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(120);
    f.put('\x7f');
  }
  CHECK_THROWS_WITH(load_kernel(file), doctest::Contains("digest"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("custom kernels drop infinite edges") {
  const auto lat = build_lattice({4, 2, 0.5, 1});
  const auto k = build_custom_kernel(lat, [](Node, std::span<const int> lift) {
    return lift[0] == 0 ? 0.0 : kInfinity;
  });
  CHECK(k.graph().edge_count() == 8);
}
