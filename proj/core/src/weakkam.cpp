#include "wkam/weakkam.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "wkam/parallel.hpp"

namespace wkam {

namespace {

CostVector negated(std::span<const double> v) {
  CostVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = -v[i];
  return out;
}

// max |a - b| over entries finite in both.
double sup_distance(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::isfinite(a[i]) && std::isfinite(b[i])) worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

double quantile(std::vector<double> sorted_values, double q) {
  if (sorted_values.empty()) return 0.0;
  const std::size_t idx = static_cast<std::size_t>(std::ceil(q * sorted_values.size())) - 1;
  return sorted_values[std::min(idx, sorted_values.size() - 1)];
}

}  // namespace

std::string_view to_string(SolutionKind k) {
  switch (k) {
    case SolutionKind::backward: return "backward";
    case SolutionKind::forward: return "forward";
    case SolutionKind::generic: return "generic";
  }
  return "generic";
}

ValueFunction lax_oleinik(const ValueFunction& u, const StepKernel& kernel_at_c,
                          Direction direction, int steps) {
  if (steps < 1) throw std::invalid_argument("lax_oleinik: steps must be >= 1");
  ValueFunction out = u;
  for (int i = 0; i < steps; ++i) {
    if (direction == Direction::backward) {
      out.values = relax(kernel_at_c, out.values);
    } else {
      out.values = negated(relax_reverse(kernel_at_c.graph(), negated(out.values)));
    }
  }
  return out;
}

DominationError::DominationError(Node p_, Node q_, double excess_)
    : std::runtime_error("boundary data not dominated: f(q) - f(p) exceeds Phi(p -> q) by " +
                         std::to_string(excess_) + " for p = node " + std::to_string(p_) +
                         ", q = node " + std::to_string(q_)),
      p(p_),
      q(q_),
      excess(excess_) {}

void check_domination(std::span<const BoundaryValue> f, const BarrierTable& table,
                      double epsilon_class) {
  for (const auto& a : f) {
    for (const auto& b : f) {
      if (a.node == b.node) continue;
      const double excess = b.value - a.value - table.phi(a.node, b.node);
      if (excess > epsilon_class) throw DominationError(a.node, b.node, excess);
    }
  }
}

ValueFunction build_backward_solution(std::span<const BoundaryValue> f, const BarrierTable& table,
                                      double epsilon_class) {
  if (f.empty()) throw std::invalid_argument("build_backward_solution: empty boundary data");
  check_domination(f, table, epsilon_class);
  const std::size_t v = static_cast<std::size_t>(table.lattice().node_count());
  ValueFunction u{std::vector<double>(v, kInfinity), SolutionKind::backward};
  for (const auto& p : f) {
    const auto row = table.h_row(p.node);
    for (std::size_t n = 0; n < v; ++n) u.values[n] = std::min(u.values[n], p.value + row[n]);
  }
  return u;
}

ValueFunction build_forward_solution(std::span<const BoundaryValue> f, const BarrierTable& table,
                                     double epsilon_class) {
  if (f.empty()) throw std::invalid_argument("build_forward_solution: empty boundary data");
  check_domination(f, table, epsilon_class);
  const std::size_t v = static_cast<std::size_t>(table.lattice().node_count());
  ValueFunction u{std::vector<double>(v, -kInfinity), SolutionKind::forward};
  for (const auto& p : f) {
    const auto col = table.h_column(p.node);
    for (std::size_t n = 0; n < v; ++n) u.values[n] = std::max(u.values[n], p.value - col[n]);
  }
  return u;
}

double fixed_point_residual(const ValueFunction& u, const StepKernel& kernel_at_c) {
  const auto dir = u.kind == SolutionKind::forward ? Direction::forward : Direction::backward;
  const auto next = lax_oleinik(u, kernel_at_c, dir, kernel_at_c.lattice().layers());
  return sup_distance(next.values, u.values);
}

HjResidual hj_residual(const ValueFunction& u, const Lattice& lattice, const LagrangianSpec& spec,
                       double c) {
  const int t = lattice.layers();
  const int d = lattice.dim();
  const double n = lattice.cells();
  std::vector<double> residuals(static_cast<std::size_t>(lattice.node_count()), -1.0);
  parallel_for(residuals.size(), [&](std::size_t idx) {
    const Node node = static_cast<Node>(idx);
    const int cell = lattice.cell_of(node);
    const int layer = lattice.layer_of(node);
    const double here = u.values[idx];
    const double later = u.values[lattice.node(cell, (layer + 1) % t)];
    if (!std::isfinite(here) || !std::isfinite(later)) return;
    Covector p;
    p.p.resize(d);
    std::vector<int> shift(d, 0);
    for (int i = 0; i < d; ++i) {
      shift[i] = 1;
      const double up = u.values[lattice.node(lattice.shifted_cell(cell, shift), layer)];
      shift[i] = -1;
      const double down = u.values[lattice.node(lattice.shifted_cell(cell, shift), layer)];
      shift[i] = 0;
      if (!std::isfinite(up) || !std::isfinite(down)) return;
      p.p[i] = (up - down) * n / 2.0;
    }
    const double dt = (later - here) * t;
    const auto x = lattice.position(cell);
    residuals[idx] = std::abs(dt + eval_hamiltonian(spec, x, p, lattice.time(layer)) - c);
  });
  std::vector<double> finite;
  finite.reserve(residuals.size());
  for (double r : residuals) {
    if (r >= 0.0) finite.push_back(r);
  }
  std::sort(finite.begin(), finite.end());
  HjResidual out;
  if (finite.empty()) return out;
  out.median = quantile(finite, 0.5);
  out.p90 = quantile(finite, 0.9);
  out.max = finite.back();
  return out;
}

VerificationReport verify_solution(const ValueFunction& u, const StepKernel& kernel_at_c,
                                   const BarrierTable& table, const LagrangianSpec& spec,
                                   const VerifyOptions& options) {
  const auto& lat = kernel_at_c.lattice();
  const Node v = lat.node_count();
  if (static_cast<Node>(u.values.size()) != v) {
    throw std::invalid_argument("verify_solution: value function size does not match lattice");
  }
  VerificationReport r;

  double defect = 0.0;
  auto visit = [&](Node x, Node y) {
    const double ux = u.values[x], uy = u.values[y];
    if (!std::isfinite(ux) || !std::isfinite(uy)) return;
    const double phi = table.phi(x, y);
    if (std::isfinite(phi)) defect = std::max(defect, uy - ux - phi);
    ++r.domination_pairs;
  };
  const long long all = static_cast<long long>(v) * v;
  if (table.all_pairs() && all <= options.exhaustive_cap) {
    for (Node x = 0; x < v; ++x) {
      const auto row = table.phi_row(x);
      const double ux = u.values[x];
      if (!std::isfinite(ux)) continue;
      for (Node y = 0; y < v; ++y) {
        const double uy = u.values[y];
        if (!std::isfinite(uy)) continue;
        if (std::isfinite(row[y])) defect = std::max(defect, uy - ux - row[y]);
        ++r.domination_pairs;
      }
    }
  } else {
    const auto rows = table.row_nodes();
    if (!rows.empty()) {
      std::mt19937_64 rng(options.seed);
      std::uniform_int_distribution<std::size_t> pick_row(0, rows.size() - 1);
      std::uniform_int_distribution<Node> pick_node(0, v - 1);
      for (long long i = 0; i < options.domination_samples; ++i) {
        const Node x = rows[pick_row(rng)];
        const Node y = pick_node(rng);
        visit(x, y);
      }
    }
  }
  r.domination_defect = std::max(defect, 0.0);
  r.fixed_point_residual = fixed_point_residual(u, kernel_at_c);
  const auto hj = hj_residual(u, lat, spec, options.c);
  r.hj_median = hj.median;
  r.hj_p90 = hj.p90;
  r.hj_max = hj.max;
  if (u.kind != SolutionKind::forward && options.graph_samples > 0) {
    r.graph_defect =
        graph_property_check(u, kernel_at_c, options.graph_samples, options.seed, options.graph_periods);
  }
  r.lipschitz_constant = lipschitz_constant(lat, u.values);
  return r;
}

CalibratedPath extract_calibrated_path(const ValueFunction& u, const StepKernel& kernel_at_c,
                                       Node start, int periods, Direction direction) {
  if (periods < 1) throw std::invalid_argument("extract_calibrated_path: periods must be >= 1");
  const auto& g = kernel_at_c.graph();
  const int steps = periods * kernel_at_c.lattice().layers();
  CalibratedPath path;
  path.direction = direction;
  path.nodes.push_back(start);
  Node cur = start;
  double total = 0.0;
  for (int i = 0; i < steps; ++i) {
    EdgeIndex best = -1;
    double best_value = 0.0;
    if (direction == Direction::backward) {
      // In-edges are ordered by source, so the first strict minimum is the
      // lexicographically least predecessor.
      for (EdgeIndex e : g.in_edges(cur)) {
        const double val = u.values[g.source(e)] + g.weight(e);
        if (best < 0 || val < best_value) {
          best = e;
          best_value = val;
        }
      }
    } else {
      for (EdgeIndex e = g.out_begin(cur); e < g.out_end(cur); ++e) {
        const double val = u.values[g.target(e)] - g.weight(e);
        if (best < 0 || val > best_value) {
          best = e;
          best_value = val;
        }
      }
    }
    if (best < 0 || !std::isfinite(best_value)) break;
    cur = direction == Direction::backward ? g.source(best) : g.target(best);
    path.nodes.push_back(cur);
    path.edges.push_back(best);
    path.step_actions.push_back(g.weight(best));
    total += g.weight(best);
  }
  // Backward: u(start) - u(end) = sum of actions; forward: u(end) - u(start).
  const double gain = direction == Direction::backward ? u.values[start] - u.values[cur]
                                                       : u.values[cur] - u.values[start];
  path.defect = std::abs(gain - total);
  return path;
}

double graph_property_check(const ValueFunction& u, const StepKernel& kernel_at_c, int samples,
                            std::uint64_t seed, int periods) {
  const auto& lat = kernel_at_c.lattice();
  const int t = lat.layers();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Node> pick(0, lat.node_count() - 1);
  std::vector<Node> starts(static_cast<std::size_t>(samples));
  for (auto& s : starts) s = pick(rng);
  std::vector<CalibratedPath> paths(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) {
    paths[i] = extract_calibrated_path(u, kernel_at_c, starts[i], std::max(periods, 2));
  });

  // Node -> forward-time velocity of the edge leaving it, per visiting path.
  std::map<Node, std::vector<std::vector<double>>> seen;
  for (const auto& p : paths) {
    for (std::size_t k = static_cast<std::size_t>(t); k < p.nodes.size(); ++k) {
      seen[p.nodes[k]].push_back(kernel_at_c.velocity(p.edges[k - 1]));
    }
  }
  double worst = 0.0;
  for (const auto& [node, vels] : seen) {
    for (std::size_t a = 0; a < vels.size(); ++a) {
      for (std::size_t b = a + 1; b < vels.size(); ++b) {
        double sq = 0.0;
        for (std::size_t i = 0; i < vels[a].size(); ++i) {
          sq += (vels[a][i] - vels[b][i]) * (vels[a][i] - vels[b][i]);
        }
        worst = std::max(worst, std::sqrt(sq));
      }
    }
  }
  return worst;
}

ValueFunction min_combine(std::span<const ValueFunction> solutions) {
  if (solutions.empty()) throw std::invalid_argument("min_combine: empty list");
  ValueFunction out = solutions.front();
  for (const auto& s : solutions.subspan(1)) {
    if (s.values.size() != out.values.size()) {
      throw std::invalid_argument("min_combine: size mismatch");
    }
    for (std::size_t i = 0; i < out.values.size(); ++i) {
      out.values[i] = std::min(out.values[i], s.values[i]);
    }
  }
  out.kind = SolutionKind::backward;
  return out;
}

BarrierSolutionResidual barrier_is_solution_check(Node z, const BarrierTable& table,
                                                  const StepKernel& kernel_at_c) {
  BarrierSolutionResidual r;
  const auto row = table.h_row(z);
  ValueFunction from{{row.begin(), row.end()}, SolutionKind::backward};
  r.backward = fixed_point_residual(from, kernel_at_c);
  ValueFunction to{negated(table.h_column(z)), SolutionKind::forward};
  r.forward = fixed_point_residual(to, kernel_at_c);
  return r;
}

}  // namespace wkam
