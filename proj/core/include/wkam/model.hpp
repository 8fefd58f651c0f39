#pragma once

/// @file model.hpp
/// @brief Time-periodic Tonelli Lagrangians on the flat torus and their
/// Legendre-dual Hamiltonians.
///
/// Every family is quadratic in the velocity with unit mass, so the Legendre
/// transform is explicit:
///
///   free               L = |v|^2/2
///   mechanical         L = |v|^2/2 - V(x)
///   drift              L = |v - c0(t)|^2/2
///   forced_mechanical  L = |v|^2/2 - V(x) (1 + mu(t))
///
/// An optional constant closed 1-form h.dx is subtracted from every family
/// (L_h = L - h.v); this is how Mather's alpha function is sampled.

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace wkam {

/// Thrown for malformed configuration data anywhere in the library.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Family { free, mechanical, drift, forced_mechanical };

std::string_view to_string(Family f);
Family family_from_string(std::string_view name);

/// Real trigonometric series on the unit circle:
///   f(s) = constant + sum_k cos[k-1] cos(2 pi k s) + sin[k-1] sin(2 pi k s).
struct FourierSeries {
  double constant = 0.0;
  std::vector<double> cos;
  std::vector<double> sin;

  double operator()(double s) const;
  double derivative(double s) const;
  bool operator==(const FourierSeries&) const = default;
};

struct LagrangianSpec {
  Family family = Family::free;
  int dim = 1;
  /// One series per dimension; V(x) = sum_i potential[i](x_i).
  std::vector<FourierSeries> potential;
  /// One series per dimension; c0(t)_i = drift[i](t).
  std::vector<FourierSeries> drift;
  /// Time modulation mu(t) of the forced family.
  FourierSeries modulation;
  /// Constant cohomology class h (empty means zero).
  std::vector<double> cohomology;

  /// Throws ConfigError when the family data does not match `dim`.
  void validate() const;
  /// Copy with the cohomology class replaced.
  LagrangianSpec with_cohomology(std::vector<double> h) const;

  bool operator==(const LagrangianSpec&) const = default;
};

/// A point of TM x S^1 in flat torus coordinates.
struct PhasePoint {
  std::vector<double> x;
  std::vector<double> v;
  double t = 0.0;

  /// Reduces x and t into [0, 1).
  void normalize();
};

struct Covector {
  std::vector<double> p;
};

/// Reduces a real number into [0, 1).
double wrap_unit(double s);

double potential_value(const LagrangianSpec& spec, std::span<const double> x, double t);

double eval_lagrangian(const LagrangianSpec& spec, std::span<const double> x,
                       std::span<const double> v, double t);
double eval_lagrangian(const LagrangianSpec& spec, const PhasePoint& point);

double eval_hamiltonian(const LagrangianSpec& spec, std::span<const double> x,
                        const Covector& p, double t);

/// p = dL/dv.
Covector velocity_to_momentum(const LagrangianSpec& spec, std::span<const double> x,
                              std::span<const double> v, double t);
/// v = dH/dp, the inverse of velocity_to_momentum.
std::vector<double> momentum_to_velocity(const LagrangianSpec& spec, std::span<const double> x,
                                         const Covector& p, double t);

/// Velocity cap 2 (1 + max|c0| + sqrt(2 osc V) + |h|), a discrete stand-in for
/// the a priori speed bound of minimizers. Extrema are estimated on a grid.
double default_velocity_cap(const LagrangianSpec& spec);

}  // namespace wkam
