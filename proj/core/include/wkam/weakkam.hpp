#pragma once

/// @file weakkam.hpp
/// @brief Lax-Oleinik operators, weak KAM solutions built from boundary data
/// on the representative set, and verifiers for their structural properties.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "wkam/barrier.hpp"
#include "wkam/lattice.hpp"
#include "wkam/minplus.hpp"
#include "wkam/model.hpp"

namespace wkam {

enum class SolutionKind { backward, forward, generic };
enum class Direction { backward, forward };

std::string_view to_string(SolutionKind k);

struct ValueFunction {
  std::vector<double> values;
  SolutionKind kind = SolutionKind::generic;
};

/// Backward: (Tu)(y) = min over x->y of u(x) + w(x,y).
/// Forward:  (Tv)(x) = max over x->y of v(y) - w(x,y).
ValueFunction lax_oleinik(const ValueFunction& u, const StepKernel& kernel_at_c,
                          Direction direction, int steps);

/// Boundary datum: a value at a node of the representative set.
struct BoundaryValue {
  Node node = 0;
  double value = 0.0;
};

/// Raised when boundary data violates f(q) - f(p) <= Phi(p -> q) + eps.
class DominationError : public std::runtime_error {
 public:
  DominationError(Node p, Node q, double excess);
  Node p;
  Node q;
  double excess;
};

/// Throws DominationError on the first violating ordered pair (p, q), scanned
/// in input order.
void check_domination(std::span<const BoundaryValue> f, const BarrierTable& table,
                      double epsilon_class);

/// u_f(n) = min over p of f(p) + h(p -> n). Needs the h rows of the
/// boundary nodes.
ValueFunction build_backward_solution(std::span<const BoundaryValue> f, const BarrierTable& table,
                                      double epsilon_class);
/// v_f(n) = max over p of f(p) - h(n -> p). Needs the h columns of the
/// boundary nodes.
ValueFunction build_forward_solution(std::span<const BoundaryValue> f, const BarrierTable& table,
                                     double epsilon_class);

struct VerificationReport {
  double domination_defect = 0.0;
  double fixed_point_residual = 0.0;
  double hj_median = 0.0;
  double hj_p90 = 0.0;
  double hj_max = 0.0;
  double graph_defect = 0.0;
  double lipschitz_constant = 0.0;
  /// Number of (x, y) pairs examined for domination.
  long long domination_pairs = 0;
};

struct VerifyOptions {
  double c = 0.0;
  /// Pair budget for the domination check; every pair is examined when the
  /// table holds all pairs and V^2 fits in the budget's exhaustive cap.
  long long domination_samples = 10000;
  long long exhaustive_cap = 1LL << 24;
  int graph_samples = 32;
  int graph_periods = 2;
  std::uint64_t seed = 0;
};

VerificationReport verify_solution(const ValueFunction& u, const StepKernel& kernel_at_c,
                                   const BarrierTable& table, const LagrangianSpec& spec,
                                   const VerifyOptions& options);

/// max |T^T u - u| over nodes finite in both, with the operator matching the
/// solution kind (forward for forward solutions, backward otherwise).
double fixed_point_residual(const ValueFunction& u, const StepKernel& kernel_at_c);

struct HjResidual {
  double median = 0.0;
  double p90 = 0.0;
  double max = 0.0;
};

/// |D_t u + H(x, D_x u, t) - c| with central differences in space and forward
/// differences in time, at every node whose stencil is finite.
HjResidual hj_residual(const ValueFunction& u, const Lattice& lattice, const LagrangianSpec& spec,
                       double c);

struct CalibratedPath {
  Direction direction = Direction::backward;
  /// Backward paths run from the start back in time; forward paths run
  /// forward. Consecutive nodes are joined by `edges[i]`.
  std::vector<Node> nodes;
  std::vector<EdgeIndex> edges;
  std::vector<double> step_actions;
  double defect = 0.0;
};

/// Argmin predecessor (argmax successor for forward) chain of periods * T
/// steps; ties go to the lexicographically least node.
CalibratedPath extract_calibrated_path(const ValueFunction& u, const StepKernel& kernel_at_c,
                                       Node start, int periods,
                                       Direction direction = Direction::backward);

/// Largest velocity mismatch at nodes shared by several backward calibrated
/// paths, ignoring the first period of each path. Velocities are those of the
/// forward-time edge leaving the node along each path.
double graph_property_check(const ValueFunction& u, const StepKernel& kernel_at_c, int samples,
                            std::uint64_t seed, int periods = 2);

/// Pointwise minimum; throws std::invalid_argument on an empty list.
ValueFunction min_combine(std::span<const ValueFunction> solutions);

struct BarrierSolutionResidual {
  double backward = 0.0;  // residual of h(z -> .) under the backward operator
  double forward = 0.0;   // residual of -h(. -> z) under the forward operator
};

BarrierSolutionResidual barrier_is_solution_check(Node z, const BarrierTable& table,
                                                  const StepKernel& kernel_at_c);

}  // namespace wkam
