#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "critdrift/error.hpp"
#include "critdrift/grid.hpp"
#include "critdrift/orlicz.hpp"
#include "test_util.hpp"

using namespace critdrift;
using critdrift::testing::random_band_limited;

namespace {

constexpr double kPi = std::numbers::pi;

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

// Adaptive Simpson with Richardson correction; independent of the grid quadrature.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 0) {
  const double m = 0.5 * (a + b);
  const double whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double left = (m - a) / 6.0 * (f(a) + 4.0 * f(lm) + f(m));
  const double right = (b - m) / 6.0 * (f(m) + 4.0 * f(rm) + f(b));
  if (depth > 40 || std::abs(left + right - whole) < 15.0 * tol) return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, 0.5 * tol, depth + 1) + adaptive_simpson(f, m, b, 0.5 * tol, depth + 1);
}

ScalarField sin_field(const TorusGrid& g, double amp) {
  return ScalarField::sample(g, [&](const auto& x) { return amp * std::sin(2.0 * kPi * x[0]); });
}

}  // namespace

TEST(Phi, DefiningValues) {
  EXPECT_EQ(phi(0.0), 0.0);
  EXPECT_NEAR(phi(kArcosh2), 1.0, 1e-15);
  EXPECT_NEAR(kArcosh2, std::log(2.0 + std::sqrt(3.0)), 3e-16);
  EXPECT_TRUE(std::isinf(phi(711.0)));
  EXPECT_TRUE(std::isinf(phi(-711.0)));
}

TEST(Phi, EvenNonnegativeAndAboveQuadratic) {
  for (double y = -50.0; y <= 50.0; y += 0.173) {
    EXPECT_EQ(phi(y), phi(-y));
    EXPECT_GE(phi(y), 0.5 * y * y);
    EXPECT_GE(phi(y), std::pow(y, 4) / 24.0 + 0.5 * y * y);
  }
  for (double y : {1e-150, 1e-20, 1e-8}) EXPECT_GT(phi(y), 0.0);
}

TEST(Modular, ConstantField) {
  const TorusGrid g(3, 8);
  EXPECT_NEAR(modular(ScalarField(g, 2.5), 2.5), std::cosh(1.0) - 1.0, 1e-15);
  EXPECT_NEAR(std::cosh(1.0) - 1.0, 0.5430806348, 1e-10);
}

TEST(Modular, RejectsNonPositiveScale) {
  const TorusGrid g(1, 8);
  const ScalarField f(g, 1.0);
  EXPECT_THROW(modular(f, 0.0), InvalidInput);
  EXPECT_THROW(modular(f, -1.0), InvalidInput);
}

TEST(Modular, SineMatchesAdaptiveQuadrature) {
  const TorusGrid g(1, 256);
  const double oracle = adaptive_simpson([](double x) { return std::cosh(std::sin(2.0 * kPi * x)) - 1.0; }, -0.5, 0.5,
                                         1e-14);
  EXPECT_NEAR(modular(sin_field(g, 1.0), 1.0), oracle, 1e-10);
  // Same value from the Bessel series: <cosh(sin)> = I0(1).
  EXPECT_NEAR(oracle, std::cyl_bessel_i(0.0, 1.0) - 1.0, 1e-12);
}

TEST(Modular, DecreasingInScaleAndVanishingAtInfinity) {
  const TorusGrid g(2, 16);
  const auto f = random_band_limited(g, 4);
  double prev = std::numeric_limits<double>::infinity();
  for (double c = 0.05; c < 100.0; c *= 1.7) {
    const double m = modular(f, c);
    EXPECT_LT(m, prev);
    prev = m;
  }
  EXPECT_LT(modular(f, 1e3 * critdrift::testing::sup_abs(f)), 1e-6);
}

TEST(OrliczNorm, ConstantClosedForm) {
  const TorusGrid g(3, 8);
  for (double a : {1e-6, 0.3, 1.0, 7.0, 1e4}) {
    const auto r = orlicz_norm(ScalarField(g, a));
    EXPECT_NEAR(r.value / (a / std::log(2.0 + std::sqrt(3.0))), 1.0, 1e-9) << a;
    EXPECT_NEAR(r.value / a, 0.759326, 1e-6);
  }
  EXPECT_NEAR(orlicz_norm(ScalarField(g, -3.0)).value, orlicz_norm(ScalarField(g, 3.0)).value, 1e-12);
}

TEST(OrliczNorm, ZeroField) {
  const TorusGrid g(2, 8);
  const auto r = orlicz_norm(ScalarField(g, 0.0));
  EXPECT_EQ(r.value, 0.0);
  EXPECT_EQ(r.iterations, 0);
}

TEST(OrliczNorm, RejectsBadInput) {
  const TorusGrid g(1, 8);
  ScalarField f(g, 1.0);
  EXPECT_THROW(orlicz_norm(f, 0.0), InvalidInput);
  f[2] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(orlicz_norm(f), InvalidInput);
}

TEST(OrliczNorm, SineMatchesBesselRoot) {
  // <Φ(a sin/c)> = I0(a/c) - 1, so the norm is a / I0^{-1}(2).
  double lo = 0.0;
  double hi = 5.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (std::cyl_bessel_i(0.0, mid) > 2.0 ? hi : lo) = mid;
  }
  const double root = 0.5 * (lo + hi);
  const TorusGrid g(1, 128);
  for (double a : {0.5, 2.0, 30.0}) {
    EXPECT_NEAR(orlicz_norm(sin_field(g, a)).value, a / root, 1e-9 * a / root);
  }
}

TEST(OrliczNorm, TwoValuedField) {
  // f = a on a set of measure θ, 0 elsewhere: θ·Φ(a/c) = 1.
  const TorusGrid g(1, 64);
  ScalarField f(g, 0.0);
  for (int j = 0; j < 16; ++j) f[static_cast<std::size_t>(j)] = 3.0;
  const double expect = 3.0 / std::acosh(1.0 + 4.0);
  EXPECT_NEAR(orlicz_norm(f).value, expect, 1e-9 * expect);
}

TEST(OrliczNorm, ContractOnResult) {
  const TorusGrid g(2, 32);
  const double tol = 1e-10;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto f = (1.0 + static_cast<double>(seed)) * random_band_limited(g, seed, 6, 8);
    const auto r = orlicz_norm(f, tol);
    EXPECT_EQ(r.value, r.hi);
    EXPECT_LT(r.hi - r.lo, tol * r.hi);
    EXPECT_LE(modular(f, r.hi), 1.0);
    EXPECT_GT(modular(f, r.lo), 1.0);
    EXPECT_LE(r.modular_at_value, 1.0);
    EXPECT_GE(r.modular_at_value, 1.0 - 1e-8);
    EXPECT_LT(r.iterations, 80);
  }
}

TEST(OrliczNorm, InitialBracketIsValid) {
  const TorusGrid g(3, 16);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto f = random_band_limited(g, seed, 3 + static_cast<int>(seed % 5), 6);
    const double lo = 0.5 * lp_norm(f, 2.0);
    const double hi = lp_norm(f, std::numeric_limits<double>::infinity()) / kArcosh2;
    EXPECT_GE(modular(f, lo), 1.0);
    EXPECT_LE(modular(f, hi), 1.0 + 1e-14);
  }
}

TEST(OrliczNorm, DominatesScaledEvenLpNorms) {
  const TorusGrid g(3, 16);
  int violations = 0;
  for (std::uint64_t seed = 100; seed < 200; ++seed) {
    const auto f = (0.2 + 0.05 * static_cast<double>(seed - 100)) * random_band_limited(g, seed);
    const double o = orlicz_norm(f).value;
    for (int p = 1; p <= 3; ++p) {
      if (o < lp_norm(f, 2.0 * p) / factorial(2 * p)) ++violations;
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(OrliczNorm, Homogeneity) {
  const TorusGrid g(2, 32);
  const double tol = 1e-10;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto f = random_band_limited(g, seed);
    const double base = orlicz_norm(f, tol).value;
    for (double lam : {-2.0, 0.5, 10.0}) {
      EXPECT_NEAR(orlicz_norm(lam * f, tol).value, std::abs(lam) * base, 2.0 * tol * std::abs(lam) * base);
    }
  }
}

TEST(OrliczNorm, TriangleInequality) {
  const TorusGrid g(2, 32);
  const double tol = 1e-10;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto f = random_band_limited(g, seed);
    const auto h = 3.0 * random_band_limited(g, seed + 1000, 4, 10);
    const double lhs = orlicz_norm(f + h, tol).value;
    const double rhs = orlicz_norm(f, tol).value + orlicz_norm(h, tol).value;
    EXPECT_LE(lhs, rhs + 2.0 * tol * rhs);
  }
}

TEST(OrliczNorm, MonotoneUnderPointwiseDomination) {
  const TorusGrid g(2, 32);
  const double tol = 1e-10;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto big = random_band_limited(g, seed);
    auto small = big;
    const auto w = random_band_limited(g, seed + 77);
    for (std::size_t j = 0; j < small.size(); ++j) small[j] *= std::min(1.0, std::abs(w[j]));
    const double nb = orlicz_norm(big, tol).value;
    EXPECT_LE(orlicz_norm(small, tol).value, nb + tol * nb);
  }
}
