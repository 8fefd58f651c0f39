#include "wkam/minplus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "wkam/parallel.hpp"

namespace wkam {

namespace {

void check_costs(std::span<const double> u) {
  bool any_finite = false;
  for (double x : u) {
    if (std::isnan(x) || x == -kInfinity) throw DivergenceError("cost vector holds NaN or -inf");
    any_finite |= x < kInfinity;
  }
  if (!any_finite) throw StructuralError("empty support: cost vector is +inf everywhere");
}

struct Component {
  std::vector<Node> nodes;  // ascending
};

// Local CSR of in-edges restricted to one component.
struct LocalGraph {
  int n = 0;
  std::vector<int> in_offset;
  std::vector<int> in_source;
  std::vector<double> in_weight;
  std::vector<int> out_offset;
  std::vector<int> out_target;
  std::vector<double> out_weight;
};

LocalGraph restrict_to(const Digraph& g, const std::vector<Node>& nodes,
                       const std::vector<int>& local_index, const std::vector<int>& comp, int c) {
  LocalGraph lg;
  lg.n = static_cast<int>(nodes.size());
  lg.in_offset.assign(lg.n + 1, 0);
  lg.out_offset.assign(lg.n + 1, 0);
  for (int i = 0; i < lg.n; ++i) {
    for (EdgeIndex e : g.in_edges(nodes[i])) {
      if (comp[g.source(e)] != c) continue;
      lg.in_source.push_back(local_index[g.source(e)]);
      lg.in_weight.push_back(g.weight(e));
    }
    lg.in_offset[i + 1] = static_cast<int>(lg.in_source.size());
    for (EdgeIndex e = g.out_begin(nodes[i]); e < g.out_end(nodes[i]); ++e) {
      if (comp[g.target(e)] != c) continue;
      lg.out_target.push_back(local_index[g.target(e)]);
      lg.out_weight.push_back(g.weight(e));
    }
    lg.out_offset[i + 1] = static_cast<int>(lg.out_target.size());
  }
  return lg;
}

std::vector<Node> canonical_rotation(std::vector<Node> cycle) {
  const auto it = std::min_element(cycle.begin(), cycle.end());
  std::rotate(cycle.begin(), it, cycle.end());
  return cycle;
}

// Karp on one strongly connected component; returns a local cycle.
std::vector<int> karp_cycle(const LocalGraph& lg, std::size_t memory_cap) {
  const int n = lg.n;
  const std::size_t cells = static_cast<std::size_t>(n + 1) * n;
  if (cells * (sizeof(double) + sizeof(int)) > memory_cap) {
    throw StructuralError("Karp table for a component of " + std::to_string(n) +
                          " nodes exceeds the memory cap; use the howard method");
  }
  std::vector<double> dist(cells, kInfinity);
  std::vector<int> pred(cells, -1);
  auto d = [&](int k, int v) -> double& { return dist[static_cast<std::size_t>(k) * n + v]; };
  d(0, 0) = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double* prev = &dist[static_cast<std::size_t>(k - 1) * n];
    double* cur = &dist[static_cast<std::size_t>(k) * n];
    int* cur_pred = &pred[static_cast<std::size_t>(k) * n];
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t vi) {
      const int v = static_cast<int>(vi);
      double best = kInfinity;
      int arg = -1;
      for (int i = lg.in_offset[v]; i < lg.in_offset[v + 1]; ++i) {
        const double c = prev[lg.in_source[i]] + lg.in_weight[i];
        if (c < best) {
          best = c;
          arg = lg.in_source[i];
        }
      }
      cur[v] = best;
      cur_pred[v] = arg;
    });
  }
  double lambda = kInfinity;
  int best_v = -1;
  for (int v = 0; v < n; ++v) {
    if (!(d(n, v) < kInfinity)) continue;
    double worst = -kInfinity;
    for (int k = 0; k < n; ++k) {
      if (d(k, v) < kInfinity) worst = std::max(worst, (d(n, v) - d(k, v)) / (n - k));
    }
    if (worst < lambda) {
      lambda = worst;
      best_v = v;
    }
  }
  if (best_v < 0) throw StructuralError("component has no cycle");
  // The n-step walk to best_v repeats a node; every cycle on it is optimal.
  std::vector<int> walk(n + 1);
  walk[n] = best_v;
  for (int k = n; k > 0; --k) walk[k - 1] = pred[static_cast<std::size_t>(k) * n + walk[k]];
  std::vector<int> last_seen(n, -1);
  for (int k = n; k >= 0; --k) {
    const int v = walk[k];
    if (last_seen[v] >= 0) {
      return std::vector<int>(walk.begin() + k, walk.begin() + last_seen[v]);
    }
    last_seen[v] = k;
  }
  throw StructuralError("Karp walk holds no cycle");
}

// Howard policy iteration on one strongly connected component.
std::vector<int> howard_cycle(const LocalGraph& lg) {
  const int n = lg.n;
  std::vector<int> policy(n, -1);  // index into out arrays
  double scale = 1.0;
  for (double w : lg.out_weight) scale = std::max(scale, std::abs(w));
  const double eps = 1e-13 * scale;
  for (int v = 0; v < n; ++v) {
    for (int i = lg.out_offset[v]; i < lg.out_offset[v + 1]; ++i) {
      if (policy[v] < 0 || lg.out_weight[i] < lg.out_weight[policy[v]]) policy[v] = i;
    }
    if (policy[v] < 0) throw StructuralError("node without out-edge inside a component");
  }
  std::vector<double> eta(n), value(n);
  std::vector<int> cycle_root(n);
  std::vector<int> state(n);
  for (int iter = 0; iter < 100000; ++iter) {
    std::fill(state.begin(), state.end(), 0);  // 0 new, 1 on stack, 2 done
    for (int start = 0; start < n; ++start) {
      if (state[start] != 0) continue;
      std::vector<int> path;
      int v = start;
      while (state[v] == 0) {
        state[v] = 1;
        path.push_back(v);
        v = lg.out_target[policy[v]];
      }
      std::size_t tail_end = path.size();
      if (state[v] == 1) {
        // New cycle: path[pos..] closes at v.
        const auto pos = static_cast<std::size_t>(std::find(path.begin(), path.end(), v) - path.begin());
        double sum = 0.0;
        for (std::size_t i = pos; i < path.size(); ++i) sum += lg.out_weight[policy[path[i]]];
        const double mean = sum / static_cast<double>(path.size() - pos);
        eta[v] = mean;
        value[v] = 0.0;
        cycle_root[v] = v;
        state[v] = 2;
        for (std::size_t i = path.size() - 1; i > pos; --i) {
          const int u = path[i];
          eta[u] = mean;
          value[u] = lg.out_weight[policy[u]] - mean + value[lg.out_target[policy[u]]];
          cycle_root[u] = v;
          state[u] = 2;
        }
        tail_end = pos;
      }
      for (std::size_t i = tail_end; i-- > 0;) {
        const int u = path[i];
        const int next = lg.out_target[policy[u]];
        eta[u] = eta[next];
        value[u] = lg.out_weight[policy[u]] - eta[u] + value[next];
        cycle_root[u] = cycle_root[next];
        state[u] = 2;
      }
    }
    bool changed = false;
    for (int v = 0; v < n; ++v) {
      double best = eta[v];
      int choice = -1;
      for (int i = lg.out_offset[v]; i < lg.out_offset[v + 1]; ++i) {
        if (eta[lg.out_target[i]] < best - eps) {
          best = eta[lg.out_target[i]];
          choice = i;
        }
      }
      if (choice >= 0) {
        policy[v] = choice;
        changed = true;
      }
    }
    if (!changed) {
      for (int v = 0; v < n; ++v) {
        double best = value[v];
        int choice = -1;
        for (int i = lg.out_offset[v]; i < lg.out_offset[v + 1]; ++i) {
          const int t = lg.out_target[i];
          if (std::abs(eta[t] - eta[v]) > eps) continue;
          const double val = lg.out_weight[i] - eta[v] + value[t];
          if (val < best - eps) {
            best = val;
            choice = i;
          }
        }
        if (choice >= 0) {
          policy[v] = choice;
          changed = true;
        }
      }
    }
    if (!changed) {
      int best_v = 0;
      for (int v = 1; v < n; ++v) {
        if (eta[v] < eta[best_v]) best_v = v;
      }
      std::vector<int> cycle;
      int v = cycle_root[best_v];
      do {
        cycle.push_back(v);
        v = lg.out_target[policy[v]];
      } while (v != cycle_root[best_v]);
      return cycle;
    }
  }
  throw StructuralError("Howard policy iteration did not terminate");
}

}  // namespace

CostVector relax(const Digraph& graph, std::span<const double> u) {
  check_costs(u);
  CostVector out(u.size(), kInfinity);
  parallel_for(u.size(), [&](std::size_t y) {
    double best = kInfinity;
    for (EdgeIndex e : graph.in_edges(static_cast<Node>(y))) {
      best = std::min(best, u[graph.source(e)] + graph.weight(e));
    }
    out[y] = best;
  });
  return out;
}

CostVector relax_reverse(const Digraph& graph, std::span<const double> u) {
  check_costs(u);
  CostVector out(u.size(), kInfinity);
  parallel_for(u.size(), [&](std::size_t x) {
    double best = kInfinity;
    const Node v = static_cast<Node>(x);
    for (EdgeIndex e = graph.out_begin(v); e < graph.out_end(v); ++e) {
      best = std::min(best, graph.weight(e) + u[graph.target(e)]);
    }
    out[x] = best;
  });
  return out;
}

CostMatrix m_step_costs(const StepKernel& kernel, Node source, int m) {
  if (m < 1) throw std::invalid_argument("m_step_costs: m must be >= 1");
  CostVector u(static_cast<std::size_t>(kernel.lattice().node_count()), kInfinity);
  u.at(source) = 0.0;
  for (int i = 0; i < m; ++i) u = relax(kernel, u);
  return {source, m, std::move(u)};
}

double cycle_mean(const Digraph& graph, std::span<const Node> cycle) {
  if (cycle.empty()) throw std::invalid_argument("cycle_mean: empty cycle");
  const auto start = static_cast<std::size_t>(std::min_element(cycle.begin(), cycle.end()) - cycle.begin());
  double sum = 0.0;
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    const Node a = cycle[(start + i) % cycle.size()];
    const Node b = cycle[(start + i + 1) % cycle.size()];
    const EdgeIndex e = graph.find_edge(a, b);
    if (e < 0) throw std::invalid_argument("cycle_mean: missing edge in cycle");
    sum += graph.weight(e);
  }
  return sum / static_cast<double>(cycle.size());
}

std::vector<int> strongly_connected_components(const Digraph& graph, int* component_count) {
  const int n = graph.node_count();
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<Node> stack;
  int next_index = 0;
  int count = 0;
  struct Frame {
    Node v;
    EdgeIndex e;
  };
  std::vector<Frame> call;
  for (Node root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    call.push_back({root, graph.out_begin(root)});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.e < graph.out_end(f.v)) {
        const Node w = graph.target(f.e++);
        if (index[w] < 0) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, graph.out_begin(w)});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
        continue;
      }
      const Node v = f.v;
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      if (low[v] == index[v]) {
        Node w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = count;
        } while (w != v);
        ++count;
      }
    }
  }
  // Renumber by smallest member.
  std::vector<int> first(count, n);
  for (Node v = 0; v < n; ++v) first[comp[v]] = std::min(first[comp[v]], v);
  std::vector<int> order(count);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return first[a] < first[b]; });
  std::vector<int> rank(count);
  for (int i = 0; i < count; ++i) rank[order[i]] = i;
  for (auto& c : comp) c = rank[c];
  if (component_count) *component_count = count;
  return comp;
}

MeanCycleResult min_mean_cycle(const Digraph& graph, CycleMethod method,
                               std::size_t memory_cap_bytes) {
  int count = 0;
  const auto comp = strongly_connected_components(graph, &count);
  std::vector<std::vector<Node>> members(count);
  for (Node v = 0; v < graph.node_count(); ++v) members[comp[v]].push_back(v);
  std::vector<int> local_index(graph.node_count(), -1);
  for (const auto& m : members) {
    for (std::size_t i = 0; i < m.size(); ++i) local_index[m[i]] = static_cast<int>(i);
  }
  MeanCycleResult best;
  best.mean = kInfinity;
  for (int c = 0; c < count; ++c) {
    const auto lg = restrict_to(graph, members[c], local_index, comp, c);
    if (lg.in_source.empty()) continue;  // trivial component, no cycle
    const auto local = method == CycleMethod::karp ? karp_cycle(lg, memory_cap_bytes)
                                                   : howard_cycle(lg);
    std::vector<Node> cycle;
    for (int v : local) cycle.push_back(members[c][v]);
    cycle = canonical_rotation(std::move(cycle));
    const double mean = cycle_mean(graph, cycle);
    if (mean < best.mean) {
      best.mean = mean;
      best.cycle = std::move(cycle);
    }
  }
  if (best.cycle.empty()) throw StructuralError("graph has no cycle");
  best.period_steps = static_cast<int>(best.cycle.size());
  return best;
}

RunningMinResult running_min_costs(const StepKernel& kernel, Node source,
                                   const RunningMinOptions& options) {
  if (options.m_min < 1 || options.m_min >= options.m_max) {
    throw std::invalid_argument("running_min_costs: need 1 <= m_min < m_max");
  }
  if (options.window < 1) throw std::invalid_argument("running_min_costs: window must be >= 1");
  if (options.min_mean && options.m_max * *options.min_mean < -options.overflow_guard) {
    throw DivergenceError("supercritical divergence: m_max * min mean = " +
                          std::to_string(options.m_max * *options.min_mean));
  }
  const int steps_per_window = options.window * kernel.lattice().layers();
  const int snapshot_step = options.m_max - steps_per_window;
  const std::size_t n = static_cast<std::size_t>(kernel.lattice().node_count());
  CostVector u(n, kInfinity);
  u.at(source) = 0.0;
  CostVector running(n, kInfinity);
  CostVector snapshot(n, kInfinity);
  RunningMinResult result;
  for (int m = 1; m <= options.m_max; ++m) {
    u = relax(kernel, u);
    if (m >= options.m_min) {
      for (std::size_t y = 0; y < n; ++y) {
        if (u[y] < running[y]) {
          if (!(running[y] - u[y] <= options.residual_tol)) result.last_improvement = m;
          running[y] = u[y];
        }
      }
    }
    if (m == snapshot_step) snapshot = running;
  }
  double residual = 0.0;
  for (std::size_t y = 0; y < n; ++y) {
    if (running[y] < kInfinity) residual = std::max(residual, snapshot[y] - running[y]);
  }
  result.costs = {source, options.m_max, std::move(running)};
  result.residual = residual;
  result.converged = residual <= options.residual_tol;
  return result;
}

SliceMatrix SliceMatrix::identity(int n) {
  SliceMatrix m(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 0.0;
  return m;
}

SliceMatrix multiply(const SliceMatrix& a, const SliceMatrix& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("multiply: shape mismatch");
  SliceMatrix c(a.rows(), b.cols());
  const int inner = a.cols();
  const int cols = b.cols();
  parallel_for(static_cast<std::size_t>(a.rows()), [&](std::size_t r) {
    double* out = c.row(static_cast<int>(r)).data();
    const auto arow = a.row(static_cast<int>(r));
    for (int k = 0; k < inner; ++k) {
      const double aik = arow[k];
      if (aik == kInfinity) continue;
      const double* brow = b.row(k).data();
      for (int j = 0; j < cols; ++j) {
        const double cand = aik + brow[j];
        out[j] = cand < out[j] ? cand : out[j];
      }
    }
  });
  return c;
}

void min_assign(SliceMatrix& acc, const SliceMatrix& x) {
  if (acc.rows() != x.rows() || acc.cols() != x.cols()) {
    throw std::invalid_argument("min_assign: shape mismatch");
  }
  for (int r = 0; r < acc.rows(); ++r) {
    auto a = acc.row(r);
    const auto b = x.row(r);
    for (std::size_t j = 0; j < a.size(); ++j) a[j] = std::min(a[j], b[j]);
  }
}

SliceMatrix power(const SliceMatrix& b, long long n) {
  if (n < 1) throw std::invalid_argument("power: exponent must be >= 1");
  SliceMatrix result;
  SliceMatrix base = b;
  bool have = false;
  while (n > 0) {
    if (n & 1) {
      result = have ? multiply(result, base) : base;
      have = true;
    }
    n >>= 1;
    if (n > 0) base = multiply(base, base);
  }
  return result;
}

void relax_layer(const StepKernel& kernel, int layer, std::span<const double> in,
                 std::span<double> out) {
  const auto& lat = kernel.lattice();
  const auto& g = kernel.graph();
  const int next = (layer + 1) % lat.layers();
  const int s = lat.cells_per_layer();
  for (int y = 0; y < s; ++y) {
    double best = kInfinity;
    for (EdgeIndex e : g.in_edges(lat.node(y, next))) {
      best = std::min(best, in[lat.cell_of(g.source(e))] + g.weight(e));
    }
    out[y] = best;
  }
}

SliceMatrix period_map(const StepKernel& kernel, int layer) {
  const auto& lat = kernel.lattice();
  const int s = lat.cells_per_layer();
  SliceMatrix p(s, s);
  parallel_for(static_cast<std::size_t>(s), [&](std::size_t r) {
    std::vector<double> cur(s, kInfinity), next(s);
    cur[r] = 0.0;
    for (int j = 0; j < lat.layers(); ++j) {
      relax_layer(kernel, (layer + j) % lat.layers(), cur, next);
      std::swap(cur, next);
    }
    std::copy(cur.begin(), cur.end(), p.row(static_cast<int>(r)).begin());
  });
  return p;
}

}  // namespace wkam
