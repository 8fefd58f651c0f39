#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace wkam {

using Node = std::int32_t;
using EdgeIndex = std::int64_t;

struct WeightedEdge {
  Node source;
  Node target;
  double weight;
};

/// Weighted digraph in compressed sparse row form with a reverse (in-edge)
/// index. Out-edges of a node are sorted by target; in-edges of a node are
/// sorted by source.
class Digraph {
 public:
  Digraph() = default;

  /// Parallel edges collapse to the minimum weight (first one on ties).
  static Digraph from_edges(int nodes, std::vector<WeightedEdge> edges);

  /// Adopts edges that are already grouped by source with targets ascending
  /// inside each group; `out_offset` has nodes + 1 entries.
  static Digraph from_sorted_csr(std::vector<EdgeIndex> out_offset, std::vector<Node> target,
                                 std::vector<double> weight);

  int node_count() const { return static_cast<int>(out_offset_.empty() ? 0 : out_offset_.size() - 1); }
  EdgeIndex edge_count() const { return static_cast<EdgeIndex>(target_.size()); }

  EdgeIndex out_begin(Node v) const { return out_offset_[v]; }
  EdgeIndex out_end(Node v) const { return out_offset_[v + 1]; }
  /// Edge ids entering y, ordered by source.
  std::span<const EdgeIndex> in_edges(Node y) const {
    return {in_edge_.data() + in_offset_[y], in_edge_.data() + in_offset_[y + 1]};
  }

  Node source(EdgeIndex e) const { return source_[e]; }
  Node target(EdgeIndex e) const { return target_[e]; }
  double weight(EdgeIndex e) const { return weight_[e]; }

  std::span<const double> weights() const { return weight_; }
  std::span<double> mutable_weights() { return weight_; }

  /// Edge id of x -> y, or -1.
  EdgeIndex find_edge(Node x, Node y) const;

  bool operator==(const Digraph&) const = default;

 private:
  void build_reverse_index();

  std::vector<EdgeIndex> out_offset_;
  std::vector<Node> source_;
  std::vector<Node> target_;
  std::vector<double> weight_;
  std::vector<EdgeIndex> in_offset_;
  std::vector<EdgeIndex> in_edge_;
};

}  // namespace wkam
