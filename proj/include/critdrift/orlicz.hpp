#pragma once
// The Orlicz function Φ(y) = cosh(y) - 1, its modular <Φ(f/c)> and the
// Luxemburg norm ||f||_Φ = inf{c > 0 : <Φ(f/c)> <= 1} on the unit torus.

#include "critdrift/grid.hpp"

namespace critdrift {

/// arcosh(2) = ln(2 + √3): the level at which Φ equals 1.
inline constexpr double kArcosh2 = 1.3169578969248167086;

inline constexpr double kDefaultOrliczTol = 1e-10;

struct OrliczNorm {
  double value = 0.0;
  // Final bisection bracket; value == hi.
  double lo = 0.0;
  double hi = 0.0;
  double modular_at_value = 0.0;
  int iterations = 0;
};

/// cosh(y) - 1 without cancellation near 0. Returns +inf once cosh overflows
/// (|y| ≳ 710.48).
double phi(double y);

/// <Φ(f/c)>. c must be > 0. May be +inf when f/c is huge.
double modular(const ScalarField& f, double c);

/// Luxemburg norm by bracketing on [||f||_2 / 2, ||f||_∞ / arcosh 2]
/// (Illinois regula falsi with a bisection fallback), stopped when
/// hi - lo < tol·hi. The returned value is the upper endpoint, so
/// modular(f, value) <= 1 always holds.
OrliczNorm orlicz_norm(const ScalarField& f, double tol = kDefaultOrliczTol);

}  // namespace critdrift
