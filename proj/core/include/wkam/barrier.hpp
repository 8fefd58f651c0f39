#pragma once

/// @file barrier.hpp
/// @brief Action potential Phi_k, extended Peierls barrier h_c, the Aubry
/// set and its static classes.
///
/// Two routes compute the same quantities:
///  - per-source vector relaxation with exact step-count windows
///    (action_potential, peierls_barrier), and
///  - BarrierTable, a dense per-layer engine that raises the period map to
///    high powers by squaring and is the workhorse for all-pairs data.

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "wkam/lattice.hpp"
#include "wkam/minplus.hpp"

namespace wkam {

struct BarrierField {
  Node source = 0;
  std::vector<double> phi_n;  // cost at duration n periods (+ layer offset); may be empty
  std::vector<double> phi;    // inf over durations
  std::vector<double> h;      // windowed running min (liminf); may be empty
  bool converged = false;
  double residual = kInfinity;
  /// Set by action_potential when the inf keeps falling (energy below critical).
  bool diverged = false;
};

/// phi_n at m = n T + layer offset (when n is given) and phi = min over
/// m in [1, m_max]. The inf is "stabilized" if it did not improve by more
/// than residual_tol over the final `window` periods; otherwise the field is
/// flagged diverged.
BarrierField action_potential(const StepKernel& kernel, Node source, std::optional<int> n,
                              int m_max, int window = 1, double residual_tol = 1e-10);

/// h for each source by running_min_costs.
std::vector<BarrierField> peierls_barrier(const StepKernel& kernel_at_c,
                                          std::span<const Node> sources,
                                          const RunningMinOptions& options);

struct BarrierOptions {
  /// Running min over durations n in [min_periods, min_periods + window_periods].
  int min_periods = 4096;
  int window_periods = 16;
  /// Final stretch (in periods) that must show no improvement.
  int convergence_window = 4;
  double residual_tol = 1e-10;
};

/// Which rows (sources) and columns (targets) of Phi and h to keep. The
/// diagonal of h is always computed for every node.
struct BarrierSelection {
  bool all_pairs = false;
  std::vector<Node> rows;
  std::vector<Node> columns;
};

class BarrierTable {
 public:
  static BarrierTable compute(const StepKernel& kernel_at_c, const BarrierOptions& options,
                              const BarrierSelection& selection);

  const Lattice& lattice() const { return lattice_; }
  const BarrierOptions& options() const { return options_; }
  bool all_pairs() const { return all_pairs_; }

  bool has_row(Node x) const { return all_pairs_ || row_index_.count(x) > 0; }
  bool has_column(Node y) const { return all_pairs_ || col_index_.count(y) > 0; }
  std::vector<Node> row_nodes() const;

  /// Throws std::out_of_range unless row x or column y is held.
  double phi(Node x, Node y) const;
  double h(Node x, Node y) const;
  std::span<const double> phi_row(Node x) const;
  std::span<const double> h_row(Node x) const;
  /// h(. -> y) over all sources.
  std::vector<double> h_column(Node y) const;
  std::vector<double> phi_column(Node y) const;

  std::span<const double> h_diagonal() const { return h_diag_; }
  std::span<const double> phi_diagonal() const { return phi_diag_; }

  BarrierField field(Node source) const;

  bool converged() const { return residual_ <= options_.residual_tol; }
  double residual() const { return residual_; }
  /// Step count at which the running min last improved (max over layers).
  long long stabilization_steps() const { return stabilization_steps_; }

 private:
  Lattice lattice_;
  BarrierOptions options_;
  bool all_pairs_ = false;
  std::unordered_map<Node, std::size_t> row_index_;
  std::unordered_map<Node, std::size_t> col_index_;
  std::vector<double> row_phi_, row_h_;  // rows of length V
  std::vector<double> col_phi_, col_h_;  // columns of length V
  std::vector<double> h_diag_, phi_diag_;
  double residual_ = 0.0;
  long long stabilization_steps_ = 0;
};

/// Max over random triples of h(x,z) - h(x,y) - Phi(y,z); x and y are drawn
/// from held rows, z from all nodes.
double check_triangle(const BarrierTable& table, int samples, std::uint64_t seed);

/// Max |phi - h| slack: returns max over held rows of phi(x,y) - h(x,y).
double phi_minus_h_max(const BarrierTable& table);

/// Max over neighbouring node pairs of |f(a) - f(b)| / distance, with spatial
/// neighbours at distance 1/N and temporal neighbours at 1/T. Pairs where
/// either value is infinite are skipped.
double lipschitz_constant(const Lattice& lattice, std::span<const double> values);

/// Largest lipschitz_constant over the held h rows.
double lipschitz_estimate(const BarrierTable& table);

/// Nodes with h(n,n) <= epsilon, ascending. Throws StructuralError if empty.
std::vector<Node> aubry_set(std::span<const double> h_diagonal, double epsilon);

struct AubryStructure {
  std::vector<Node> aubry_nodes;      // ascending
  std::vector<int> class_of;          // parallel to aubry_nodes
  std::vector<Node> representatives;  // one per class, class id order
  double epsilon_aubry = 0.0;
  double epsilon_class = 0.0;
  int class_count() const { return static_cast<int>(representatives.size()); }
};

/// Lexicographic NodeId key: (cell index..., layer).
long long lexicographic_key(const Lattice& lattice, Node n);

/// Connected components of the threshold graph Phi(x,y) + Phi(y,x) <= eps on
/// the Aubry nodes; classes are numbered by their lexicographically least
/// node, which is also the representative.
AubryStructure static_classes(const BarrierTable& table, std::span<const Node> aubry_nodes,
                              double epsilon_aubry, double epsilon_class);

/// 5 residual + 2 tol_c T m, with m the stabilization step count.
double default_epsilon_aubry(const BarrierTable& table, double tol_c);

}  // namespace wkam
