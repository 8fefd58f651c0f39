#include "wkam/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wkam {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_dim(const std::vector<FourierSeries>& series, int dim, const char* what) {
  if (static_cast<int>(series.size()) != dim) {
    throw ConfigError(std::string("model.") + what + ": expected " + std::to_string(dim) +
                      " series (one per dimension), got " + std::to_string(series.size()));
  }
}

double cohomology_component(const LagrangianSpec& spec, std::size_t i) {
  return spec.cohomology.empty() ? 0.0 : spec.cohomology[i];
}

// Velocity shift c0(t) of the drift family; zero for the others.
double drift_component(const LagrangianSpec& spec, std::size_t i, double t) {
  return spec.family == Family::drift ? spec.drift[i](t) : 0.0;
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::free: return "free";
    case Family::mechanical: return "mechanical";
    case Family::drift: return "drift";
    case Family::forced_mechanical: return "forced_mechanical";
  }
  throw ConfigError("unknown family tag");
}

Family family_from_string(std::string_view name) {
  if (name == "free") return Family::free;
  if (name == "mechanical") return Family::mechanical;
  if (name == "drift") return Family::drift;
  if (name == "forced_mechanical") return Family::forced_mechanical;
  throw ConfigError("model.family: unknown family '" + std::string(name) + "'");
}

double FourierSeries::operator()(double s) const {
  double value = constant;
  for (std::size_t k = 0; k < cos.size(); ++k) value += cos[k] * std::cos(kTwoPi * (k + 1) * s);
  for (std::size_t k = 0; k < sin.size(); ++k) value += sin[k] * std::sin(kTwoPi * (k + 1) * s);
  return value;
}

double FourierSeries::derivative(double s) const {
  double value = 0.0;
  for (std::size_t k = 0; k < cos.size(); ++k) {
    value -= cos[k] * kTwoPi * (k + 1) * std::sin(kTwoPi * (k + 1) * s);
  }
  for (std::size_t k = 0; k < sin.size(); ++k) {
    value += sin[k] * kTwoPi * (k + 1) * std::cos(kTwoPi * (k + 1) * s);
  }
  return value;
}

void LagrangianSpec::validate() const {
  if (dim < 1) throw ConfigError("model.dim: must be >= 1");
  switch (family) {
    case Family::free: break;
    case Family::mechanical: check_dim(potential, dim, "potential"); break;
    case Family::drift: check_dim(drift, dim, "drift"); break;
    case Family::forced_mechanical: check_dim(potential, dim, "potential"); break;
  }
  if (!cohomology.empty() && static_cast<int>(cohomology.size()) != dim) {
    throw ConfigError("model.cohomology: expected " + std::to_string(dim) + " components");
  }
  auto finite = [](const FourierSeries& f) {
    auto ok = [](double x) { return std::isfinite(x); };
    return ok(f.constant) && std::all_of(f.cos.begin(), f.cos.end(), ok) &&
           std::all_of(f.sin.begin(), f.sin.end(), ok);
  };
  for (const auto& f : potential) {
    if (!finite(f)) throw ConfigError("model.potential: non-finite coefficient");
  }
  for (const auto& f : drift) {
    if (!finite(f)) throw ConfigError("model.drift: non-finite coefficient");
  }
  if (!finite(modulation)) throw ConfigError("model.modulation: non-finite coefficient");
  for (double h : cohomology) {
    if (!std::isfinite(h)) throw ConfigError("model.cohomology: non-finite entry");
  }
}

LagrangianSpec LagrangianSpec::with_cohomology(std::vector<double> h) const {
  LagrangianSpec copy = *this;
  copy.cohomology = std::move(h);
  copy.validate();
  return copy;
}

void PhasePoint::normalize() {
  for (double& xi : x) xi = wrap_unit(xi);
  t = wrap_unit(t);
}

double wrap_unit(double s) {
  double r = s - std::floor(s);
  return r >= 1.0 ? 0.0 : r;
}

double potential_value(const LagrangianSpec& spec, std::span<const double> x, double t) {
  if (spec.family != Family::mechanical && spec.family != Family::forced_mechanical) return 0.0;
  double v = 0.0;
  for (int i = 0; i < spec.dim; ++i) v += spec.potential[i](x[i]);
  if (spec.family == Family::forced_mechanical) v *= 1.0 + spec.modulation(t);
  return v;
}

double eval_lagrangian(const LagrangianSpec& spec, std::span<const double> x,
                       std::span<const double> v, double t) {
  t = wrap_unit(t);
  double kinetic = 0.0;
  double form = 0.0;
  for (int i = 0; i < spec.dim; ++i) {
    const double rel = v[i] - drift_component(spec, i, t);
    kinetic += rel * rel;
    form += cohomology_component(spec, i) * v[i];
  }
  return 0.5 * kinetic - potential_value(spec, x, t) - form;
}

double eval_lagrangian(const LagrangianSpec& spec, const PhasePoint& point) {
  return eval_lagrangian(spec, point.x, point.v, point.t);
}

double eval_hamiltonian(const LagrangianSpec& spec, std::span<const double> x, const Covector& p,
                        double t) {
  t = wrap_unit(t);
  // H(x,p,t) = |p+h|^2/2 + (p+h).c0(t) + V(x,t)
  double value = 0.0;
  for (int i = 0; i < spec.dim; ++i) {
    const double q = p.p[i] + cohomology_component(spec, i);
    value += 0.5 * q * q + q * drift_component(spec, i, t);
  }
  return value + potential_value(spec, x, t);
}

Covector velocity_to_momentum(const LagrangianSpec& spec, std::span<const double> /*x*/,
                              std::span<const double> v, double t) {
  t = wrap_unit(t);
  Covector out{std::vector<double>(spec.dim)};
  for (int i = 0; i < spec.dim; ++i) {
    out.p[i] = v[i] - drift_component(spec, i, t) - cohomology_component(spec, i);
  }
  return out;
}

std::vector<double> momentum_to_velocity(const LagrangianSpec& spec, std::span<const double> /*x*/,
                                         const Covector& p, double t) {
  t = wrap_unit(t);
  std::vector<double> v(spec.dim);
  for (int i = 0; i < spec.dim; ++i) {
    v[i] = p.p[i] + cohomology_component(spec, i) + drift_component(spec, i, t);
  }
  return v;
}

double default_velocity_cap(const LagrangianSpec& spec) {
  constexpr int kSamples = 256;
  double max_drift = 0.0;
  if (spec.family == Family::drift) {
    for (const auto& c : spec.drift) {
      double m = 0.0;
      for (int j = 0; j < kSamples; ++j) m = std::max(m, std::abs(c(double(j) / kSamples)));
      max_drift = std::max(max_drift, m);
    }
  }
  double oscillation = 0.0;
  if (spec.family == Family::mechanical || spec.family == Family::forced_mechanical) {
    double mod_max = 1.0;
    if (spec.family == Family::forced_mechanical) {
      for (int j = 0; j < kSamples; ++j) {
        mod_max = std::max(mod_max, std::abs(1.0 + spec.modulation(double(j) / kSamples)));
      }
    }
    for (const auto& v : spec.potential) {
      double lo = v(0.0), hi = v(0.0);
      for (int j = 1; j < kSamples; ++j) {
        const double val = v(double(j) / kSamples);
        lo = std::min(lo, val);
        hi = std::max(hi, val);
      }
      // V(1+mu) can swing by up to max|V| (1+max|mu|) around zero.
      const double amp = spec.family == Family::forced_mechanical
                             ? 2.0 * std::max(std::abs(lo), std::abs(hi)) * mod_max
                             : hi - lo;
      oscillation += amp;
    }
  }
  double h_norm = 0.0;
  for (double h : spec.cohomology) h_norm = std::max(h_norm, std::abs(h));
  return 2.0 * (1.0 + max_drift + std::sqrt(2.0 * oscillation) + h_norm);
}

}  // namespace wkam
