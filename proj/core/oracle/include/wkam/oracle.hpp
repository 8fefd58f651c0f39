#pragma once

/// @file oracle.hpp
/// @brief Brute-force and closed-form reference values used to check the
/// min-plus engine. Nothing here calls into minplus; the routines enumerate
/// paths and cycles directly from the edge lists.

#include <span>
#include <vector>

#include "wkam/graph.hpp"
#include "wkam/model.hpp"

namespace wkam::oracle {

/// Minimum cost of every path with exactly m edges from `source`, found by
/// depth-first enumeration. Costs are accumulated from the source outward.
std::vector<double> path_costs(const Digraph& graph, Node source, int m);

/// out(y) = min over every edge x -> y of u(x) + w, scanning the whole edge list.
std::vector<double> edge_scan_relax(const Digraph& graph, std::span<const double> u);

struct CycleOracle {
  double mean = 0.0;
  std::vector<Node> cycle;  // starts at its smallest node
  long long cycles_seen = 0;
};

/// Minimum mean over every simple cycle. Each cycle is summed in order from
/// its smallest node.
CycleOracle min_cycle_mean(const Digraph& graph);

/// Mane potential of a 1-d mechanical Lagrangian at energy c from the point
/// x0: the shorter of the two arc integrals of sqrt(2 (c - V)), by composite
/// Simpson quadrature.
double mane_potential(const LagrangianSpec& spec, double c, double x0, double x,
                      int panels = 4096);

/// Closed form for V = (1 + cos 2 pi x)/2, c = 1, x0 = 0:
/// sqrt(2)/pi (1 - cos(pi min(x, 1 - x))).
double pendulum_potential(double x);

}  // namespace wkam::oracle
