#include "wkam/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace wkam::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void walk(const Digraph& g, Node at, int left, double cost, std::vector<double>& best) {
  if (left == 0) {
    best[at] = std::min(best[at], cost);
    return;
  }
  for (EdgeIndex e = g.out_begin(at); e < g.out_end(at); ++e) {
    walk(g, g.target(e), left - 1, cost + g.weight(e), best);
  }
}

struct CycleSearch {
  explicit CycleSearch(const Digraph& graph) : g(graph) {}

  const Digraph& g;
  Node start = 0;
  std::vector<char> on_path;
  std::vector<Node> path;
  std::vector<double> weights;
  CycleOracle best;

  void close(double closing) {
    double sum = 0.0;
    for (double w : weights) sum += w;
    sum += closing;
    const double mean = sum / static_cast<double>(path.size());
    ++best.cycles_seen;
    if (best.cycle.empty() || mean < best.mean) {
      best.mean = mean;
      best.cycle = path;
    }
  }

  void extend(Node v) {
    for (EdgeIndex e = g.out_begin(v); e < g.out_end(v); ++e) {
      const Node w = g.target(e);
      if (w == start) {
        close(g.weight(e));
      } else if (w > start && !on_path[w]) {
        on_path[w] = 1;
        path.push_back(w);
        weights.push_back(g.weight(e));
        extend(w);
        weights.pop_back();
        path.pop_back();
        on_path[w] = 0;
      }
    }
  }
};

}  // namespace

std::vector<double> path_costs(const Digraph& graph, Node source, int m) {
  if (m < 1) throw std::invalid_argument("oracle::path_costs: m must be >= 1");
  std::vector<double> best(static_cast<std::size_t>(graph.node_count()), kInf);
  walk(graph, source, m, 0.0, best);
  return best;
}

std::vector<double> edge_scan_relax(const Digraph& graph, std::span<const double> u) {
  std::vector<double> out(u.size(), kInf);
  for (EdgeIndex e = 0; e < graph.edge_count(); ++e) {
    const Node x = graph.source(e);
    const Node y = graph.target(e);
    out[y] = std::min(out[y], u[x] + graph.weight(e));
  }
  return out;
}

CycleOracle min_cycle_mean(const Digraph& graph) {
  CycleSearch s(graph);
  s.on_path.assign(static_cast<std::size_t>(graph.node_count()), 0);
  for (Node v = 0; v < graph.node_count(); ++v) {
    s.start = v;
    s.path = {v};
    s.weights.clear();
    s.on_path[v] = 1;
    s.extend(v);
    s.on_path[v] = 0;
  }
  if (s.best.cycle.empty()) throw std::runtime_error("oracle::min_cycle_mean: acyclic graph");
  return s.best;
}

double mane_potential(const LagrangianSpec& spec, double c, double x0, double x, int panels) {
  if (spec.dim != 1) throw std::invalid_argument("oracle::mane_potential: 1-d models only");
  if (panels < 2 || panels % 2 != 0) panels = std::max(2, panels + panels % 2);
  auto speed = [&](double s) {
    const double xs[1] = {wrap_unit(s)};
    return std::sqrt(2.0 * std::max(0.0, c - potential_value(spec, xs, 0.0)));
  };
  auto simpson = [&](double a, double b) {
    const double h = (b - a) / panels;
    double sum = speed(a) + speed(b);
    for (int i = 1; i < panels; ++i) sum += speed(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return sum * h / 3.0;
  };
  const double d = wrap_unit(x - x0);
  if (d == 0.0) return 0.0;
  return std::min(simpson(x0, x0 + d), simpson(x0 + d, x0 + 1.0));
}

double pendulum_potential(double x) {
  const double s = wrap_unit(x);
  return std::numbers::sqrt2 / std::numbers::pi * (1.0 - std::cos(std::numbers::pi * std::min(s, 1.0 - s)));
}

}  // namespace wkam::oracle
