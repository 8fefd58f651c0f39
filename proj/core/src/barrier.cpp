#include "wkam/barrier.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "wkam/parallel.hpp"

namespace wkam {

namespace {

struct LayerPass {
  std::vector<double> diag_h;
  std::vector<double> diag_phi;
  double residual = 0.0;
  long long stabilization_steps = 0;
};

// Dense computation for sources in one layer. Rows listed in `cells` get full
// phi/h rows (length V) written to phi_out[i] / h_out[i].
LayerPass layer_pass(const StepKernel& kernel, int layer, const BarrierOptions& opt,
                     const std::vector<int>& cells, const std::vector<double*>& phi_out,
                     const std::vector<double*>& h_out) {
  const auto& lat = kernel.lattice();
  const int s = lat.cells_per_layer();
  const int t = lat.layers();

  const SliceMatrix p = period_map(kernel, layer);

  // Phi on the slice: min over n in [1, 2^K + 1] of P^n, with 2^K >= S.
  SliceMatrix star = p;
  min_assign(star, SliceMatrix::identity(s));
  for (long long span = 1; span < s; span *= 2) star = multiply(star, star);
  const SliceMatrix phi_slice = multiply(p, star);

  // h on the slice: min over n in [n0, n0 + W] of P^n.
  SliceMatrix current = power(p, opt.min_periods);
  SliceMatrix h_slice = current;
  SliceMatrix snapshot;
  const int snap_at = opt.window_periods - opt.convergence_window;
  if (snap_at == 0) snapshot = h_slice;
  int last_improving = 0;
  for (int i = 1; i <= opt.window_periods; ++i) {
    current = multiply(current, p);
    double improvement = 0.0;
    for (int r = 0; r < s; ++r) {
      const auto hr = h_slice.row(r);
      const auto cr = current.row(r);
      for (int c = 0; c < s; ++c) {
        if (cr[c] < hr[c]) improvement = std::max(improvement, hr[c] - cr[c]);
      }
    }
    if (improvement > opt.residual_tol) last_improving = i;
    min_assign(h_slice, current);
    if (i == snap_at) snapshot = h_slice;
  }

  LayerPass out;
  out.stabilization_steps = static_cast<long long>(opt.min_periods + last_improving) * t;
  for (int r = 0; r < s; ++r) {
    for (int c = 0; c < s; ++c) {
      if (h_slice(r, c) < kInfinity) {
        out.residual = std::max(out.residual, snapshot(r, c) - h_slice(r, c));
      }
    }
  }
  out.diag_h.resize(s);
  out.diag_phi.resize(s);
  for (int c = 0; c < s; ++c) {
    out.diag_h[c] = h_slice(c, c);
    out.diag_phi[c] = phi_slice(c, c);
  }

  parallel_for(cells.size(), [&](std::size_t i) {
    const int r = cells[i];
    std::vector<double> phi_cur(phi_slice.row(r).begin(), phi_slice.row(r).end());
    std::vector<double> h_cur(h_slice.row(r).begin(), h_slice.row(r).end());
    std::vector<double> next(s);
    for (int o = 0; o < t; ++o) {
      const int target_layer = (layer + o) % t;
      double* phi_dst = phi_out[i] + static_cast<std::size_t>(target_layer) * s;
      double* h_dst = h_out[i] + static_cast<std::size_t>(target_layer) * s;
      if (o == 0) {
        std::copy(phi_cur.begin(), phi_cur.end(), phi_dst);
        std::copy(h_cur.begin(), h_cur.end(), h_dst);
        // Durations below one period start from the source itself.
        phi_cur[r] = std::min(phi_cur[r], 0.0);
      } else {
        std::copy(phi_cur.begin(), phi_cur.end(), phi_dst);
        std::copy(h_cur.begin(), h_cur.end(), h_dst);
      }
      if (o + 1 < t) {
        relax_layer(kernel, target_layer, phi_cur, next);
        std::swap(phi_cur, next);
        relax_layer(kernel, target_layer, h_cur, next);
        std::swap(h_cur, next);
      }
    }
  });
  return out;
}

std::map<int, std::vector<Node>> group_by_layer(const Lattice& lat, std::vector<Node> nodes) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  std::map<int, std::vector<Node>> out;
  for (Node n : nodes) {
    if (n < 0 || n >= lat.node_count()) throw std::out_of_range("BarrierTable: node out of range");
    out[lat.layer_of(n)].push_back(n);
  }
  return out;
}

}  // namespace

BarrierField action_potential(const StepKernel& kernel, Node source, std::optional<int> n,
                              int m_max, int window, double residual_tol) {
  const auto& lat = kernel.lattice();
  const int t = lat.layers();
  if (m_max < t) throw std::invalid_argument("action_potential: m_max must be >= T");
  if (window < 1) throw std::invalid_argument("action_potential: window must be >= 1");
  const std::size_t v = static_cast<std::size_t>(lat.node_count());
  const int source_layer = lat.layer_of(source);

  BarrierField f;
  f.source = source;
  f.phi.assign(v, kInfinity);
  if (n) f.phi_n.assign(v, kInfinity);
  std::vector<double> snapshot;
  const int snap_step = m_max - window * t;
  CostVector u(v, kInfinity);
  u.at(source) = 0.0;
  for (int m = 1; m <= m_max; ++m) {
    u = relax(kernel, u);
    for (std::size_t y = 0; y < v; ++y) f.phi[y] = std::min(f.phi[y], u[y]);
    if (n) {
      // Targets in layer j are reached only at m = offset (mod T).
      const int layer_now = (source_layer + m) % t;
      const int offset = (layer_now - source_layer + t) % t;
      const int wanted = *n * t + offset;
      if (m == wanted) {
        const int s = lat.cells_per_layer();
        for (int c = 0; c < s; ++c) {
          const Node y = lat.node(c, layer_now);
          f.phi_n[y] = u[y];
        }
      }
    }
    if (m == snap_step) snapshot = f.phi;
  }
  if (snapshot.empty()) snapshot.assign(v, kInfinity);
  double residual = 0.0;
  for (std::size_t y = 0; y < v; ++y) {
    if (f.phi[y] < kInfinity) residual = std::max(residual, snapshot[y] - f.phi[y]);
  }
  f.residual = residual;
  f.converged = residual <= residual_tol;
  f.diverged = !f.converged;
  return f;
}

std::vector<BarrierField> peierls_barrier(const StepKernel& kernel_at_c,
                                          std::span<const Node> sources,
                                          const RunningMinOptions& options) {
  std::vector<BarrierField> out;
  out.reserve(sources.size());
  for (Node s : sources) {
    auto r = running_min_costs(kernel_at_c, s, options);
    BarrierField f;
    f.source = s;
    f.h = std::move(r.costs.costs);
    f.converged = r.converged;
    f.residual = r.residual;
    out.push_back(std::move(f));
  }
  return out;
}

BarrierTable BarrierTable::compute(const StepKernel& kernel_at_c, const BarrierOptions& options,
                                   const BarrierSelection& selection) {
  if (options.min_periods < 1 || options.window_periods < 1 || options.convergence_window < 1 ||
      options.convergence_window > options.window_periods) {
    throw std::invalid_argument(
        "BarrierTable: need min_periods >= 1 and 1 <= convergence_window <= window_periods");
  }
  const auto& lat = kernel_at_c.lattice();
  const int s = lat.cells_per_layer();
  const int t = lat.layers();
  const std::size_t v = static_cast<std::size_t>(lat.node_count());

  BarrierTable table;
  table.lattice_ = lat;
  table.options_ = options;
  table.all_pairs_ = selection.all_pairs;
  table.h_diag_.assign(v, kInfinity);
  table.phi_diag_.assign(v, kInfinity);

  std::vector<Node> rows = selection.rows;
  if (selection.all_pairs) {
    rows.resize(v);
    std::iota(rows.begin(), rows.end(), 0);
  }
  const auto by_layer = group_by_layer(lat, rows);
  std::size_t row_count = 0;
  for (const auto& [layer, nodes] : by_layer) {
    for (Node n : nodes) table.row_index_[n] = row_count++;
  }
  table.row_phi_.assign(row_count * v, kInfinity);
  table.row_h_.assign(row_count * v, kInfinity);

  for (int layer = 0; layer < t; ++layer) {
    std::vector<int> cells;
    std::vector<double*> phi_out, h_out;
    if (auto it = by_layer.find(layer); it != by_layer.end()) {
      for (Node n : it->second) {
        cells.push_back(lat.cell_of(n));
        const std::size_t idx = table.row_index_.at(n);
        phi_out.push_back(table.row_phi_.data() + idx * v);
        h_out.push_back(table.row_h_.data() + idx * v);
      }
    }
    const auto pass = layer_pass(kernel_at_c, layer, options, cells, phi_out, h_out);
    for (int c = 0; c < s; ++c) {
      table.h_diag_[lat.node(c, layer)] = pass.diag_h[c];
      table.phi_diag_[lat.node(c, layer)] = pass.diag_phi[c];
    }
    table.residual_ = std::max(table.residual_, pass.residual);
    table.stabilization_steps_ = std::max(table.stabilization_steps_, pass.stabilization_steps);
  }

  if (!selection.all_pairs && !selection.columns.empty()) {
    // Columns of the forward table are rows of the time-reversed one.
    const StepKernel rev = kernel_at_c.reversed();
    std::vector<Node> rev_nodes;
    for (Node y : selection.columns) rev_nodes.push_back(lat.reversed(y));
    const auto rev_by_layer = group_by_layer(lat, rev_nodes);
    std::size_t col_count = 0;
    std::vector<double> rev_phi, rev_h;
    std::vector<Node> order;
    for (const auto& [layer, nodes] : rev_by_layer) {
      for (Node n : nodes) order.push_back(n);
    }
    rev_phi.assign(order.size() * v, kInfinity);
    rev_h.assign(order.size() * v, kInfinity);
    for (const auto& [layer, nodes] : rev_by_layer) {
      std::vector<int> cells;
      std::vector<double*> phi_out, h_out;
      for (Node n : nodes) {
        cells.push_back(lat.cell_of(n));
        phi_out.push_back(rev_phi.data() + col_count * v);
        h_out.push_back(rev_h.data() + col_count * v);
        table.col_index_[lat.reversed(n)] = col_count++;
      }
      const auto pass = layer_pass(rev, layer, options, cells, phi_out, h_out);
      table.residual_ = std::max(table.residual_, pass.residual);
    }
    table.col_phi_.assign(col_count * v, kInfinity);
    table.col_h_.assign(col_count * v, kInfinity);
    for (std::size_t i = 0; i < col_count; ++i) {
      for (std::size_t n = 0; n < v; ++n) {
        const Node rn = lat.reversed(static_cast<Node>(n));
        table.col_phi_[i * v + n] = rev_phi[i * v + rn];
        table.col_h_[i * v + n] = rev_h[i * v + rn];
      }
    }
  }
  return table;
}

std::vector<Node> BarrierTable::row_nodes() const {
  std::vector<Node> out;
  out.reserve(row_index_.size());
  for (const auto& [n, idx] : row_index_) out.push_back(n);
  std::sort(out.begin(), out.end());
  return out;
}

double BarrierTable::phi(Node x, Node y) const {
  const std::size_t v = static_cast<std::size_t>(lattice_.node_count());
  if (auto it = row_index_.find(x); it != row_index_.end()) return row_phi_[it->second * v + y];
  if (auto it = col_index_.find(y); it != col_index_.end()) return col_phi_[it->second * v + x];
  throw std::out_of_range("BarrierTable: neither row nor column held for phi lookup");
}

double BarrierTable::h(Node x, Node y) const {
  const std::size_t v = static_cast<std::size_t>(lattice_.node_count());
  if (auto it = row_index_.find(x); it != row_index_.end()) return row_h_[it->second * v + y];
  if (auto it = col_index_.find(y); it != col_index_.end()) return col_h_[it->second * v + x];
  throw std::out_of_range("BarrierTable: neither row nor column held for h lookup");
}

std::span<const double> BarrierTable::phi_row(Node x) const {
  const std::size_t v = static_cast<std::size_t>(lattice_.node_count());
  return {row_phi_.data() + row_index_.at(x) * v, v};
}

std::span<const double> BarrierTable::h_row(Node x) const {
  const std::size_t v = static_cast<std::size_t>(lattice_.node_count());
  return {row_h_.data() + row_index_.at(x) * v, v};
}

std::vector<double> BarrierTable::h_column(Node y) const {
  const std::size_t v = static_cast<std::size_t>(lattice_.node_count());
  if (auto it = col_index_.find(y); it != col_index_.end()) {
    return {col_h_.begin() + it->second * v, col_h_.begin() + (it->second + 1) * v};
  }
  std::vector<double> out(v);
  for (std::size_t x = 0; x < v; ++x) out[x] = h(static_cast<Node>(x), y);
  return out;
}

std::vector<double> BarrierTable::phi_column(Node y) const {
  const std::size_t v = static_cast<std::size_t>(lattice_.node_count());
  if (auto it = col_index_.find(y); it != col_index_.end()) {
    return {col_phi_.begin() + it->second * v, col_phi_.begin() + (it->second + 1) * v};
  }
  std::vector<double> out(v);
  for (std::size_t x = 0; x < v; ++x) out[x] = phi(static_cast<Node>(x), y);
  return out;
}

BarrierField BarrierTable::field(Node source) const {
  BarrierField f;
  f.source = source;
  const auto p = phi_row(source);
  const auto hh = h_row(source);
  f.phi.assign(p.begin(), p.end());
  f.h.assign(hh.begin(), hh.end());
  f.residual = residual_;
  f.converged = converged();
  return f;
}

double check_triangle(const BarrierTable& table, int samples, std::uint64_t seed) {
  const auto rows = table.row_nodes();
  if (rows.empty()) throw std::invalid_argument("check_triangle: table holds no rows");
  const int v = table.lattice().node_count();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_row(0, rows.size() - 1);
  std::uniform_int_distribution<Node> pick_node(0, v - 1);
  double worst = -kInfinity;
  for (int i = 0; i < samples; ++i) {
    const Node x = rows[pick_row(rng)];
    const Node y = rows[pick_row(rng)];
    const Node z = pick_node(rng);
    const double lhs = table.h(x, z);
    const double rhs = table.h(x, y) + table.phi(y, z);
    if (lhs < kInfinity && rhs < kInfinity) worst = std::max(worst, lhs - rhs);
  }
  return worst;
}

double phi_minus_h_max(const BarrierTable& table) {
  double worst = -kInfinity;
  for (Node x : table.row_nodes()) {
    const auto p = table.phi_row(x);
    const auto h = table.h_row(x);
    for (std::size_t y = 0; y < p.size(); ++y) {
      if (h[y] < kInfinity) worst = std::max(worst, p[y] - h[y]);
    }
  }
  return worst;
}

double lipschitz_constant(const Lattice& lattice, std::span<const double> values) {
  const int s = lattice.cells_per_layer();
  const int t = lattice.layers();
  const double dx = 1.0 / lattice.cells();
  const double dt = 1.0 / t;
  double worst = 0.0;
  std::vector<int> shift(lattice.dim(), 0);
  for (int layer = 0; layer < t; ++layer) {
    for (int c = 0; c < s; ++c) {
      const double a = values[lattice.node(c, layer)];
      if (!(a < kInfinity)) continue;
      for (int i = 0; i < lattice.dim(); ++i) {
        shift[i] = 1;
        const double b = values[lattice.node(lattice.shifted_cell(c, shift), layer)];
        shift[i] = 0;
        if (b < kInfinity) worst = std::max(worst, std::abs(a - b) / dx);
      }
      const double b = values[lattice.node(c, (layer + 1) % t)];
      if (b < kInfinity) worst = std::max(worst, std::abs(a - b) / dt);
    }
  }
  return worst;
}

double lipschitz_estimate(const BarrierTable& table) {
  double worst = 0.0;
  for (Node x : table.row_nodes()) {
    worst = std::max(worst, lipschitz_constant(table.lattice(), table.h_row(x)));
  }
  return worst;
}

std::vector<Node> aubry_set(std::span<const double> h_diagonal, double epsilon) {
  std::vector<Node> out;
  for (std::size_t n = 0; n < h_diagonal.size(); ++n) {
    if (h_diagonal[n] <= epsilon) out.push_back(static_cast<Node>(n));
  }
  if (out.empty()) {
    throw StructuralError("empty Aubry set: contradicts the zero-mean cycle of a critical kernel");
  }
  return out;
}

long long lexicographic_key(const Lattice& lattice, Node n) {
  return static_cast<long long>(lattice.cell_of(n)) * lattice.layers() + lattice.layer_of(n);
}

AubryStructure static_classes(const BarrierTable& table, std::span<const Node> aubry_nodes,
                              double epsilon_aubry, double epsilon_class) {
  const auto& lat = table.lattice();
  const std::size_t a = aubry_nodes.size();
  std::vector<std::size_t> parent(a);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = i + 1; j < a; ++j) {
      const double d = table.phi(aubry_nodes[i], aubry_nodes[j]) +
                       table.phi(aubry_nodes[j], aubry_nodes[i]);
      if (d <= epsilon_class) {
        const auto ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  }
  // Representative = lexicographically least member.
  std::map<std::size_t, Node> best;
  for (std::size_t i = 0; i < a; ++i) {
    const auto r = find(i);
    auto it = best.find(r);
    if (it == best.end() || lexicographic_key(lat, aubry_nodes[i]) < lexicographic_key(lat, it->second)) {
      best[r] = aubry_nodes[i];
    }
  }
  std::vector<std::pair<long long, std::size_t>> order;
  for (const auto& [root, rep] : best) order.emplace_back(lexicographic_key(lat, rep), root);
  std::sort(order.begin(), order.end());
  std::map<std::size_t, int> class_id;
  AubryStructure out;
  for (const auto& [key, root] : order) {
    class_id[root] = static_cast<int>(out.representatives.size());
    out.representatives.push_back(best[root]);
  }
  out.aubry_nodes.assign(aubry_nodes.begin(), aubry_nodes.end());
  out.class_of.resize(a);
  for (std::size_t i = 0; i < a; ++i) out.class_of[i] = class_id[find(i)];
  out.epsilon_aubry = epsilon_aubry;
  out.epsilon_class = epsilon_class;
  return out;
}

double default_epsilon_aubry(const BarrierTable& table, double tol_c) {
  const double residual = std::isfinite(table.residual()) ? table.residual() : 0.0;
  return 5.0 * residual + 2.0 * tol_c * table.lattice().layers() *
                              static_cast<double>(table.stabilization_steps());
}

}  // namespace wkam
