#pragma once

/// @file minplus.hpp
/// @brief Min-plus (tropical) path-cost engine over step kernels.
///
/// Extended reals are IEEE doubles with +inf as the unreachable sentinel;
/// +inf + x = +inf and min(+inf, x) = x hold natively. NaN and -inf never
/// enter a cost vector: divergence is reported, not stored.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "wkam/graph.hpp"
#include "wkam/lattice.hpp"

namespace wkam {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

using CostVector = std::vector<double>;

/// Raised when costs run off to -inf (energy below the critical value).
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Graph-structure failures (no cycle, empty support).
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One min-plus matrix-vector product: out(y) = min over x->y of u(x) + w(x,y).
CostVector relax(const Digraph& graph, std::span<const double> u);
inline CostVector relax(const StepKernel& kernel, std::span<const double> u) {
  return relax(kernel.graph(), u);
}
/// Transposed product: out(x) = min over x->y of w(x,y) + u(y).
CostVector relax_reverse(const Digraph& graph, std::span<const double> u);

/// Costs of exactly `steps` steps from `source` to every node.
struct CostMatrix {
  Node source = 0;
  int steps = 0;
  CostVector costs;
};

CostMatrix m_step_costs(const StepKernel& kernel, Node source, int m);

struct MeanCycleResult {
  double mean = 0.0;         // average edge weight per step
  std::vector<Node> cycle;   // starts at its smallest node
  int period_steps = 0;      // cycle length
};

enum class CycleMethod { karp, howard };

/// Mean edge weight of a closed node sequence, summed in cycle order
/// starting from its smallest node. Consecutive nodes must be joined by an
/// edge (the closing edge back to the first node is implied).
double cycle_mean(const Digraph& graph, std::span<const Node> cycle);

/// Minimum mean cycle over all strongly connected components. Karp's
/// algorithm is exact and needs O(V^2) memory per component; Howard policy
/// iteration is the low-memory alternative. The returned mean is
/// recomputed from the returned cycle with cycle_mean.
MeanCycleResult min_mean_cycle(const Digraph& graph, CycleMethod method = CycleMethod::karp,
                               std::size_t memory_cap_bytes = std::size_t(1) << 32);
inline MeanCycleResult min_mean_cycle(const StepKernel& kernel,
                                      CycleMethod method = CycleMethod::karp,
                                      std::size_t memory_cap_bytes = std::size_t(1) << 32) {
  return min_mean_cycle(kernel.graph(), method, memory_cap_bytes);
}

/// Strongly connected components, numbered in order of their smallest node.
std::vector<int> strongly_connected_components(const Digraph& graph, int* component_count);

struct RunningMinOptions {
  int m_min = 1;
  int m_max = 1;
  /// Number of final eligible step counts (one per period per target) over
  /// which the running min must not improve.
  int window = 1;
  double residual_tol = 1e-10;
  /// Minimum cycle mean of the kernel, when known, for the divergence guard.
  std::optional<double> min_mean;
  double overflow_guard = 1e12;
};

struct RunningMinResult {
  /// Running minimum over m in [m_min, m_max]; `steps` holds m_max.
  CostMatrix costs;
  bool converged = false;
  /// Largest improvement of any finite target over the final window
  /// (+inf if a target first became reachable inside it).
  double residual = kInfinity;
  /// Last step count at which some target improved by more than residual_tol.
  int last_improvement = 0;
};

RunningMinResult running_min_costs(const StepKernel& kernel, Node source,
                                   const RunningMinOptions& options);

/// Dense row-major min-plus matrix.
class SliceMatrix {
 public:
  SliceMatrix() = default;
  SliceMatrix(int rows, int cols, double fill = kInfinity)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  static SliceMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  std::span<double> row(int r) { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const double> row(int r) const { return {data_.data() + static_cast<std::size_t>(r) * cols_, static_cast<std::size_t>(cols_)}; }
  std::span<const double> data() const { return data_; }

  bool operator==(const SliceMatrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// Min-plus product a (x) b.
SliceMatrix multiply(const SliceMatrix& a, const SliceMatrix& b);
/// Elementwise acc = min(acc, x).
void min_assign(SliceMatrix& acc, const SliceMatrix& x);
/// b^n for n >= 1 by binary powering.
SliceMatrix power(const SliceMatrix& b, long long n);

/// One step of the kernel restricted to the slice layer -> layer+1, acting on
/// a row vector indexed by flat cell.
void relax_layer(const StepKernel& kernel, int layer, std::span<const double> in,
                 std::span<double> out);

/// Costs of one full period, from layer a back to layer a (S x S).
SliceMatrix period_map(const StepKernel& kernel, int layer);

}  // namespace wkam
