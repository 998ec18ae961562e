#include "critdrift/orlicz.hpp"

#include <cmath>
#include <limits>

#include "critdrift/error.hpp"
#include "critdrift/simd.hpp"

namespace critdrift {

double phi(double y) { return simd::phi_scalar(y); }

namespace {

double modular_unchecked(const ScalarField& f, double c) {
  return simd::kernels().phi_sum(f.values().data(), f.size(), 1.0 / c) * f.grid().weight();
}

}  // namespace

double modular(const ScalarField& f, double c) {
  if (!(c > 0.0)) throw InvalidInput("modular: c must be > 0");
  if (!f.all_finite()) throw InvalidInput("modular: field contains non-finite values");
  return modular_unchecked(f, c);
}

OrliczNorm orlicz_norm(const ScalarField& f, double tol) {
  if (!(tol > 0.0)) throw InvalidInput("orlicz_norm: tol must be > 0");
  if (!f.all_finite()) throw InvalidInput("orlicz_norm: field contains non-finite values");
  const auto& k = simd::kernels();
  const double sup = k.max_abs(f.values().data(), f.size());
  OrliczNorm out;
  if (sup == 0.0) return out;

  const double l2 = std::sqrt(k.dot(f.values().data(), f.values().data(), f.size()) * f.grid().weight());
  // Φ(y) >= y²/2 puts the modular at >= 2 on the lower end; Φ(|f|/c) <= Φ(arcosh 2) = 1
  // pointwise on the upper end.
  double lo = 0.5 * l2;
  double hi = sup / kArcosh2;
  double m_hi = modular_unchecked(f, hi);
  // Rounding can leave Φ(arcosh 2) a hair above 1 for constant fields.
  while (m_hi > 1.0) {
    hi *= 1.0 + 4.0 * std::numeric_limits<double>::epsilon();
    m_hi = modular_unchecked(f, hi);
  }
  // Illinois regula falsi on g = ln modular(f, c) in the variable ln c, where
  // g is close to linear; bisection whenever an end is not finite. The
  // bracket invariant g(lo) > 0 >= g(hi) holds throughout.
  auto log_mod = [](double m) { return std::log(m); };
  double g_lo = log_mod(modular_unchecked(f, lo));
  double g_hi = log_mod(m_hi);
  int last_side = 0;
  int it = 0;
  while (hi - lo >= tol * hi) {
    double mid = 0.5 * (lo + hi);
    if (std::isfinite(g_lo) && std::isfinite(g_hi) && g_lo > g_hi) {
      const double a = std::log(lo);
      const double b = std::log(hi);
      const double x = std::exp(b - g_hi * (b - a) / (g_hi - g_lo));
      // Keep a margin from the ends so the bracket keeps shrinking.
      const double margin = 0.25 * tol * hi;
      if (x > lo + margin && x < hi - margin) mid = x;
    }
    const double m = modular_unchecked(f, mid);
    // +inf (overflow) compares > 1 and moves lo, which is the right call.
    if (m <= 1.0) {
      hi = mid;
      m_hi = m;
      g_hi = log_mod(m);
      if (last_side == 1) g_lo *= 0.5;
      last_side = 1;
    } else {
      lo = mid;
      g_lo = log_mod(m);
      if (last_side == -1) g_hi *= 0.5;
      last_side = -1;
    }
    ++it;
  }
  out.value = hi;
  out.lo = lo;
  out.hi = hi;
  out.modular_at_value = m_hi;
  out.iterations = it;
  return out;
}

}  // namespace critdrift
