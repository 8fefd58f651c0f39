#pragma once

/// @file critical.hpp
/// @brief Critical value, Mather's alpha on constant cohomology classes, and
/// the subsolution threshold test.

#include <span>
#include <string_view>
#include <vector>

#include "wkam/lattice.hpp"
#include "wkam/minplus.hpp"
#include "wkam/model.hpp"

namespace wkam {

/// One atom of the occupation measure of the optimal cycle: the edge's
/// source node, its quadrature point, and its velocity.
struct MeasureAtom {
  NodeId node;
  std::vector<double> position;  // segment midpoint
  double time = 0.0;             // mid-step time
  std::vector<double> velocity;
  double weight = 0.0;
};

struct CriticalResult {
  double c_est = 0.0;
  std::vector<Node> cycle;
  int period_steps = 0;
  std::vector<MeasureAtom> measure;
  /// Average of L over the measure (should be -c_est).
  double measure_action = 0.0;
  /// Gap between the quadrature-point and node-point averages of L over the
  /// cycle; a proxy for the lattice discretization error.
  double discretization_tolerance = 0.0;
};

/// c_est = -T * (min mean edge weight of the k = 0 kernel).
CriticalResult critical_value(const LagrangianSpec& spec, const StepKernel& kernel_at_zero,
                              CycleMethod method = CycleMethod::karp);
CriticalResult critical_value(const LagrangianSpec& spec, const Lattice& lattice,
                              CycleMethod method = CycleMethod::karp);

struct AlphaSample {
  std::vector<double> h;
  double alpha = 0.0;
};

/// alpha(h) = c(L - h.v), one kernel rebuild per sample.
std::vector<AlphaSample> alpha_function(const LagrangianSpec& spec, const Lattice& lattice,
                                        std::span<const std::vector<double>> h_values,
                                        CycleMethod method = CycleMethod::karp);

/// Largest midpoint-convexity violation alpha((a+b)/2) - (alpha(a)+alpha(b))/2
/// over all sample pairs whose midpoint is also sampled.
double alpha_convexity_violation(std::span<const AlphaSample> samples);

enum class Feasibility { feasible, infeasible, inconclusive };

std::string_view to_string(Feasibility f);

/// Value iteration u <- min(u, relax(u)) from u = 0 on a kernel built at k.
/// Stable within 1e-10 before the cap: a bounded subsolution exists
/// (feasible). Still moving with min u below -(V-1) * max negative edge
/// weight, which no simple path can reach: a negative cycle exists
/// (infeasible). Otherwise inconclusive.
Feasibility subsolution_test(const StepKernel& kernel_at_k, int iterations);
Feasibility subsolution_test(const LagrangianSpec& spec, const Lattice& lattice, double k,
                             int iterations);

}  // namespace wkam
