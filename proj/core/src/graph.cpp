#include "wkam/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace wkam {

Digraph Digraph::from_edges(int nodes, std::vector<WeightedEdge> edges) {
  for (const auto& e : edges) {
    if (e.source < 0 || e.source >= nodes || e.target < 0 || e.target >= nodes) {
      throw std::out_of_range("Digraph: edge endpoint out of range");
    }
  }
  std::stable_sort(edges.begin(), edges.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  std::vector<EdgeIndex> offset(static_cast<std::size_t>(nodes) + 1, 0);
  std::vector<Node> target;
  std::vector<double> weight;
  target.reserve(edges.size());
  weight.reserve(edges.size());
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    double best = edges[i].weight;
    while (j < edges.size() && edges[j].source == edges[i].source &&
           edges[j].target == edges[i].target) {
      best = std::min(best, edges[j].weight);
      ++j;
    }
    target.push_back(edges[i].target);
    weight.push_back(best);
    ++offset[edges[i].source + 1];
    i = j;
  }
  for (int v = 0; v < nodes; ++v) offset[v + 1] += offset[v];
  return from_sorted_csr(std::move(offset), std::move(target), std::move(weight));
}

Digraph Digraph::from_sorted_csr(std::vector<EdgeIndex> out_offset, std::vector<Node> target,
                                 std::vector<double> weight) {
  if (out_offset.empty() || target.size() != weight.size() ||
      out_offset.back() != static_cast<EdgeIndex>(target.size())) {
    throw std::invalid_argument("Digraph: inconsistent CSR arrays");
  }
  Digraph g;
  g.out_offset_ = std::move(out_offset);
  g.target_ = std::move(target);
  g.weight_ = std::move(weight);
  g.source_.resize(g.target_.size());
  const int n = g.node_count();
  for (Node v = 0; v < n; ++v) {
    for (EdgeIndex e = g.out_offset_[v]; e < g.out_offset_[v + 1]; ++e) g.source_[e] = v;
  }
  g.build_reverse_index();
  return g;
}

void Digraph::build_reverse_index() {
  const int n = node_count();
  in_offset_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (Node t : target_) ++in_offset_[t + 1];
  for (int v = 0; v < n; ++v) in_offset_[v + 1] += in_offset_[v];
  in_edge_.resize(target_.size());
  std::vector<EdgeIndex> cursor(in_offset_.begin(), in_offset_.end() - 1);
  // Edge ids grow with source, so each in-list comes out sorted by source.
  for (EdgeIndex e = 0; e < edge_count(); ++e) in_edge_[cursor[target_[e]]++] = e;
}

EdgeIndex Digraph::find_edge(Node x, Node y) const {
  const auto first = target_.begin() + out_offset_[x];
  const auto last = target_.begin() + out_offset_[x + 1];
  const auto it = std::lower_bound(first, last, y);
  return (it != last && *it == y) ? static_cast<EdgeIndex>(it - target_.begin()) : -1;
}

}  // namespace wkam
