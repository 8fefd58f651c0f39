#pragma once

/// @file lattice.hpp
/// @brief Layered space-time lattice on T^d x S^1 and the one-step min-plus
/// action kernel.
///
/// Nodes are (cell, layer) with cell in [0,N)^d and layer in [0,T). Position
/// of cell i is i/N, time of layer j is j/T. An edge (x, j) -> (y, j+1 mod T)
/// carries the discrete action of the straight segment from x to a lift of
/// y, evaluated with the midpoint rule:
///
///   w = L(x + delta/2, delta T, (j + 1/2)/T) / T + k / T,
///
/// minimized over integer lifts delta = s/N with |s_i| <= r, where
/// r = ceil(v_max N / T).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wkam/graph.hpp"
#include "wkam/model.hpp"

namespace wkam {

struct LatticeSpec {
  int cells = 0;     // N, grid points per spatial dimension
  int layers = 0;    // T, time layers per period
  double v_max = 0;  // velocity cap, torus lengths per period
  int dim = 1;       // d

  /// Reachable radius in cells per step, ceil(v_max N / T).
  int radius() const;
  void validate() const;
  bool operator==(const LatticeSpec&) const = default;
};

/// Public node label. Ordering is lexicographic in (cell..., layer), which is
/// the tie-break order used throughout.
struct NodeId {
  std::vector<int> cell;
  int layer = 0;

  auto operator<=>(const NodeId&) const = default;
  bool operator==(const NodeId&) const = default;
};

/// Index tables for a lattice. Flat node index = layer * S + flat cell, with
/// the first cell coordinate most significant, so ascending flat cells inside
/// a layer are in lexicographic cell order.
class Lattice {
 public:
  Lattice() = default;
  explicit Lattice(LatticeSpec spec);

  const LatticeSpec& spec() const { return spec_; }
  int dim() const { return spec_.dim; }
  int cells() const { return spec_.cells; }
  int layers() const { return spec_.layers; }
  int radius() const { return radius_; }
  int cells_per_layer() const { return cells_per_layer_; }
  int node_count() const { return cells_per_layer_ * spec_.layers; }

  Node node(int flat_cell, int layer) const { return layer * cells_per_layer_ + flat_cell; }
  Node node(const NodeId& id) const;
  NodeId node_id(Node n) const;
  int layer_of(Node n) const { return n / cells_per_layer_; }
  int cell_of(Node n) const { return n % cells_per_layer_; }

  std::vector<int> cell_index(int flat_cell) const;
  int flat_cell(std::span<const int> index) const;
  /// Flat cell reached from `flat` by the (possibly negative) shift, with wraparound.
  int shifted_cell(int flat, std::span<const int> shift) const;

  std::vector<double> position(int flat_cell) const;
  double time(int layer) const { return static_cast<double>(layer) / spec_.layers; }

  /// Layer relabelling j -> (T - j) mod T used by time-reversed kernels.
  Node reversed(Node n) const;

  bool operator==(const Lattice& o) const { return spec_ == o.spec_; }

 private:
  LatticeSpec spec_{};
  int radius_ = 0;
  int cells_per_layer_ = 0;
};

/// Index tables for `spec`; throws ConfigError on invalid or disconnected
/// lattices.
Lattice build_lattice(const LatticeSpec& spec);

struct StepWeight {
  double weight;          // +inf when no admissible lift exists
  std::vector<int> lift;  // displacement in cells
};

/// Minimal midpoint-rule action over admissible lifts from x-cell at layer j
/// to y-cell at layer j+1, including the k/T offset.
StepWeight step_weight(const LagrangianSpec& spec, const Lattice& lattice, int x_cell, int y_cell,
                       int layer, double k);

/// The one-step min-plus kernel. Immutable once built.
class StepKernel {
 public:
  StepKernel() = default;

  const Lattice& lattice() const { return lattice_; }
  double k() const { return k_; }
  const Digraph& graph() const { return graph_; }
  bool is_reversed() const { return reversed_; }

  double weight(EdgeIndex e) const { return graph_.weight(e); }
  /// Weight at k = 0.
  double base_weight(EdgeIndex e) const { return base_weight_[e]; }
  std::span<const int> lift(EdgeIndex e) const {
    return {lift_.data() + e * lattice_.dim(), static_cast<std::size_t>(lattice_.dim())};
  }
  /// Lifted displacement times T, in torus lengths per period.
  std::vector<double> velocity(EdgeIndex e) const;

  /// Same structure with every weight equal to base + k/T.
  StepKernel with_offset(double k) const;
  /// Edge-reversed kernel on the relabelled lattice (see Lattice::reversed);
  /// weights are carried over unchanged.
  StepKernel reversed() const;

  /// Approximate resident size.
  std::size_t memory_bytes() const;

  bool operator==(const StepKernel&) const = default;

  /// Raw storage; `lift` holds dim() ints per edge.
  struct Parts {
    Digraph graph;
    std::vector<double> base_weight;
    std::vector<int> lift;
  };
  static StepKernel from_parts(const Lattice& lattice, double k, Parts parts);

  friend StepKernel load_kernel(const std::filesystem::path&, std::string*);

 private:
  Lattice lattice_;
  double k_ = 0.0;
  bool reversed_ = false;
  Digraph graph_;
  std::vector<double> base_weight_;
  std::vector<int> lift_;
};

/// Estimated kernel footprint in bytes before building.
std::size_t estimate_kernel_bytes(const Lattice& lattice);

/// Builds the action kernel at energy offset k. Throws ConfigError if the
/// estimated footprint exceeds `memory_cap_bytes`.
StepKernel build_step_kernel(const LagrangianSpec& spec, const Lattice& lattice, double k,
                             std::size_t memory_cap_bytes = std::size_t(1) << 32);

/// Kernel with the lattice's edge structure and weights supplied by a
/// callback (source node, lift in cells); +inf drops the edge. Used for
/// hand-set and random kernels.
StepKernel build_custom_kernel(const Lattice& lattice,
                               const std::function<double(Node, std::span<const int>)>& weight);

/// Binary kernel cache: header {magic, version, config hash, N, T, d, k,
/// v_max, r, edge count}, then per edge in layer-major order {target, lift,
/// base weight, weight}, then a SHA-256 of everything before it.
void save_kernel(const std::filesystem::path& path, const StepKernel& kernel,
                 const std::string& config_hash);
/// Throws std::runtime_error on I/O failure, bad header, or digest mismatch.
/// When `config_hash` is non-null it receives the stored hash.
StepKernel load_kernel(const std::filesystem::path& path, std::string* config_hash = nullptr);

}  // namespace wkam
