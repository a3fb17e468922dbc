#pragma once
// Exponent bookkeeping for power-law fluids with dissipative heating:
// regularity ladder, pressure integrability, temperature windows and the
// integrability condition for the convective temperature flux.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace nsf {

/// Galerkin admissibility of the growth exponent: p > 2d/(d+2).
inline bool galerkin_admissible(double p, int d) {
  if (d != 2 && d != 3) throw std::invalid_argument("dimension must be 2 or 3");
  return p > 2.0 * d / (d + 2.0);
}

struct RegularityClassification {
  double p = 0.0;
  int d = 3;
  bool admissible = false;
  // The remaining flags are meaningful only for d == 3.
  bool ladder_applicable = false;
  bool energy_equality = false;
  bool suitable = false;
  bool internal_energy_equality = false;
};

/// Weak solutions for p > 6/5, energy equality for p > 8/5, suitable weak
/// solutions for p > 9/5, entropy/internal-energy equalities for p >= 11/5.
/// For d = 2 only admissibility is reported.
inline RegularityClassification classify(double p, int d = 3) {
  if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("p must be a finite number > 1");
  RegularityClassification c;
  c.p = p;
  c.d = d;
  c.admissible = galerkin_admissible(p, d);
  if (d == 3) {
    c.ladder_applicable = true;
    c.energy_equality = p > 8.0 / 5.0;
    c.suitable = p > 9.0 / 5.0;
    c.internal_energy_equality = p >= 11.0 / 5.0;
  }
  return c;
}

inline double conjugate_exponent(double p) { return p / (p - 1.0); }

/// z' = min{p', 5p/6, 5/3}, valid for p > 6/5.
inline double pressure_exponent(double p) {
  if (!(p > 6.0 / 5.0) || !std::isfinite(p))
    throw std::invalid_argument("pressure exponent needs p > 6/5");
  return std::min({conjugate_exponent(p), 5.0 * p / 6.0, 5.0 / 3.0});
}

struct TemperatureWindow {
  double q;      // space-time integrability of theta
  double sigma;  // power used for the gradient estimate
};

/// For a gradient exponent r in [1, 5/4): q = (5-r)/(3(2-r)), sigma = 1 - (5-4r)/(3r).
inline TemperatureWindow temperature_window(double r) {
  if (!(r >= 1.0 && r < 5.0 / 4.0))
    throw std::invalid_argument("temperature window needs 1 <= r < 5/4, got r = " +
                                std::to_string(r));
  return {(5.0 - r) / (3.0 * (2.0 - r)), 1.0 - (5.0 - 4.0 * r) / (3.0 * r)};
}

/// Left side of the integrability condition for theta*v in L^{1+eps}:
///   3 eps/(5p-6) + 3(2 + 2 eps - sigma)/(4 sigma).
inline double convective_lhs(double p, double eps, double sigma) {
  return 3.0 * eps / (5.0 * p - 6.0) + 3.0 * (2.0 + 2.0 * eps - sigma) / (4.0 * sigma);
}

/// Largest eps for which some sigma in (0,1) satisfies convective_lhs <= 1.
/// The left side decreases in sigma, so feasibility is decided at sigma -> 1.
inline double convective_eps_threshold(double p) {
  return (5.0 * p - 6.0) / (30.0 * p - 24.0);
}

/// Returns a feasible sigma in (0,1) or nothing. The left side is strictly
/// decreasing in sigma, so its minimizer over (0,1) clipped to the open
/// interval is the largest double below 1.
inline std::optional<double> convective_integrability(double p, double eps) {
  if (!(p > 6.0 / 5.0)) throw std::invalid_argument("convective integrability needs p > 6/5");
  if (!(eps > 0.0)) throw std::invalid_argument("convective integrability needs eps > 0");
  const double sigma = std::nextafter(1.0, 0.0);
  if (convective_lhs(p, eps, sigma) > 1.0) return std::nullopt;
  return sigma;
}

}  // namespace nsf
