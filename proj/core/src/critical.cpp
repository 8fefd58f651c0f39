#include "wkam/critical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wkam {

CriticalResult critical_value(const LagrangianSpec& spec, const StepKernel& kernel_at_zero,
                              CycleMethod method) {
  if (kernel_at_zero.k() != 0.0) {
    throw std::invalid_argument("critical_value: kernel must be built at k = 0");
  }
  const auto& lat = kernel_at_zero.lattice();
  const auto& g = kernel_at_zero.graph();
  const auto mcr = min_mean_cycle(kernel_at_zero, method);

  CriticalResult out;
  out.c_est = -static_cast<double>(lat.layers()) * mcr.mean;
  if (out.c_est == 0.0) out.c_est = 0.0;  // drop the sign of -0
  out.cycle = mcr.cycle;
  out.period_steps = mcr.period_steps;

  const double atom_weight = 1.0 / mcr.period_steps;
  double node_action = 0.0;
  for (std::size_t i = 0; i < mcr.cycle.size(); ++i) {
    const Node a = mcr.cycle[i];
    const Node b = mcr.cycle[(i + 1) % mcr.cycle.size()];
    const EdgeIndex e = g.find_edge(a, b);
    MeasureAtom atom;
    atom.node = lat.node_id(a);
    const auto x = lat.position(lat.cell_of(a));
    const auto lift = kernel_at_zero.lift(e);
    atom.position.resize(lat.dim());
    for (int c = 0; c < lat.dim(); ++c) {
      atom.position[c] = wrap_unit(x[c] + 0.5 * lift[c] / lat.cells());
    }
    atom.time = (lat.layer_of(a) + 0.5) / lat.layers();
    atom.velocity = kernel_at_zero.velocity(e);
    atom.weight = atom_weight;
    out.measure_action += atom_weight * eval_lagrangian(spec, atom.position, atom.velocity, atom.time);
    node_action += atom_weight * eval_lagrangian(spec, x, atom.velocity, lat.time(lat.layer_of(a)));
    out.measure.push_back(std::move(atom));
  }
  out.discretization_tolerance = std::abs(node_action - out.measure_action) + 1e-12;
  return out;
}

CriticalResult critical_value(const LagrangianSpec& spec, const Lattice& lattice,
                              CycleMethod method) {
  return critical_value(spec, build_step_kernel(spec, lattice, 0.0), method);
}

std::vector<AlphaSample> alpha_function(const LagrangianSpec& spec, const Lattice& lattice,
                                        std::span<const std::vector<double>> h_values,
                                        CycleMethod method) {
  std::vector<AlphaSample> out;
  out.reserve(h_values.size());
  for (const auto& h : h_values) {
    if (static_cast<int>(h.size()) != spec.dim) {
      throw std::invalid_argument("alpha_function: cohomology vector has wrong dimension");
    }
    for (double x : h) {
      if (!std::isfinite(x)) throw std::invalid_argument("alpha_function: non-finite h");
    }
    const auto shifted = spec.with_cohomology(h);
    out.push_back({h, critical_value(shifted, lattice, method).c_est});
  }
  return out;
}

double alpha_convexity_violation(std::span<const AlphaSample> samples) {
  auto close = [](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a[i] - b[i]) > 1e-12) return false;
    }
    return true;
  };
  double worst = -kInfinity;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = i + 1; j < samples.size(); ++j) {
      std::vector<double> mid(samples[i].h.size());
      for (std::size_t c = 0; c < mid.size(); ++c) mid[c] = 0.5 * (samples[i].h[c] + samples[j].h[c]);
      for (const auto& m : samples) {
        if (close(m.h, mid)) {
          worst = std::max(worst, m.alpha - 0.5 * (samples[i].alpha + samples[j].alpha));
        }
      }
    }
  }
  return worst;
}

std::string_view to_string(Feasibility f) {
  switch (f) {
    case Feasibility::feasible: return "feasible";
    case Feasibility::infeasible: return "infeasible";
    case Feasibility::inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Feasibility subsolution_test(const StepKernel& kernel_at_k, int iterations) {
  const auto& g = kernel_at_k.graph();
  const int v = g.node_count();
  if (iterations < v) {
    throw std::invalid_argument("subsolution_test: iterations must be >= node count (" +
                                std::to_string(v) + ")");
  }
  double most_negative = 0.0;
  for (double w : g.weights()) most_negative = std::min(most_negative, w);
  // No simple path can cost less than this.
  const double floor = (v - 1) * most_negative;

  CostVector u(static_cast<std::size_t>(v), 0.0);
  for (int it = 0; it < iterations; ++it) {
    const auto r = relax(g, u);
    double change = 0.0;
    double lowest = kInfinity;
    for (int y = 0; y < v; ++y) {
      const double next = std::min(u[y], r[y]);
      change = std::max(change, u[y] - next);
      u[y] = next;
      lowest = std::min(lowest, next);
    }
    if (change <= 1e-10) return Feasibility::feasible;
    if (lowest < floor) return Feasibility::infeasible;
  }
  return Feasibility::inconclusive;
}

Feasibility subsolution_test(const LagrangianSpec& spec, const Lattice& lattice, double k,
                             int iterations) {
  return subsolution_test(build_step_kernel(spec, lattice, k), iterations);
}

}  // namespace wkam
