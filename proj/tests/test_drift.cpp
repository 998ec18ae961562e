#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "critdrift/drift.hpp"
#include "critdrift/error.hpp"
#include "critdrift/field_io.hpp"
#include "critdrift/grid.hpp"
#include "test_util.hpp"

using namespace critdrift;
using critdrift::testing::max_abs_diff;
using critdrift::testing::random_band_limited;

namespace {

constexpr double kPi = std::numbers::pi;

VectorField hardy(const TorusGrid& g, double delta, int sign = 1, std::optional<double> core = std::nullopt) {
  DriftSpec spec;
  spec.kind = HardyDrift{delta, sign, core};
  return build_drift(spec, g);
}

// Direct O(N²) evaluation of the discrete Morrey quantity.
double brute_force_morrey(const VectorField& b, double eps, const std::vector<double>& radii) {
  const TorusGrid& g = b.grid();
  const double q = 2.0 + eps;
  const auto m = b.magnitude_squared();
  double best = 0.0;
  for (double r : radii) {
    for (std::size_t c = 0; c < g.size(); ++c) {
      const auto xc = g.point(c);
      double sum = 0.0;
      int count = 0;
      for (std::size_t j = 0; j < g.size(); ++j) {
        const auto x = g.point(j);
        double d2 = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
          double dx = std::abs(x[static_cast<std::size_t>(a)] - xc[static_cast<std::size_t>(a)]);
          dx = std::min(dx, 1.0 - dx);
          d2 += dx * dx;
        }
        if (std::sqrt(d2) <= r * (1.0 + 1e-12)) {
          sum += std::pow(m[j], 0.5 * q);
          ++count;
        }
      }
      best = std::max(best, r * std::pow(sum / count, 1.0 / q));
    }
  }
  return best;
}

}  // namespace

TEST(BuildDrift, ConstantIsUniform) {
  const TorusGrid g(3, 8);
  DriftSpec spec;
  spec.kind = ConstantDrift{{1.5, 0.0, -2.0}};
  const auto b = build_drift(spec, g);
  for (std::size_t j = 0; j < g.size(); ++j) {
    EXPECT_EQ(b[0][j], 1.5);
    EXPECT_EQ(b[1][j], 0.0);
    EXPECT_EQ(b[2][j], -2.0);
  }
  spec.kind = ConstantDrift{{1.0}};
  EXPECT_THROW(build_drift(spec, g), InvalidInput);
}

TEST(BuildDrift, HardyMagnitudeOnAxis) {
  const TorusGrid g(3, 64);
  const double delta = 4.0;
  const auto b = hardy(g, delta);
  const double h = g.spacing();
  // Points (jh, 0, 0) with 2h < jh < cutoff/2 = 0.2.
  for (int j = 3; j * h < 0.2; ++j) {
    const std::size_t flat = static_cast<std::size_t>(32 + j) * 64 * 64 + 32 * 64 + 32;
    const double r = j * h;
    ASSERT_NEAR(g.point(flat)[0], r, 1e-15);
    EXPECT_NEAR(b[0][flat], std::sqrt(delta) * 0.5 / r, 1e-12);
    EXPECT_EQ(b[1][flat], 0.0);
    // sign = +1 points away from the origin, so -b points inward.
    EXPECT_GT(b[0][flat], 0.0);
  }
}

TEST(BuildDrift, HardySignFlipsField) {
  const TorusGrid g(3, 16);
  const auto plus = hardy(g, 2.0, 1);
  const auto minus = hardy(g, 2.0, -1);
  for (int a = 0; a < 3; ++a) EXPECT_EQ(max_abs_diff(plus[a], -1.0 * minus[a]), 0.0);
}

TEST(BuildDrift, HardyCoreOnlyChangesTheCore) {
  const TorusGrid g(3, 32);
  const double h = g.spacing();
  const auto wide = hardy(g, 4.0, 1, 2.0 * h);
  const auto narrow = hardy(g, 4.0, 1, h);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const auto x = g.point(j);
    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    if (r > 2.0 * h) {
      for (int a = 0; a < 3; ++a) ASSERT_EQ(wide[a][j], narrow[a][j]);
    }
  }
}

TEST(BuildDrift, HardyVanishesOutsideCutoff) {
  const TorusGrid g(3, 32);
  DriftSpec spec;
  spec.kind = HardyDrift{};
  spec.cutoff_radius = 0.3;
  const auto b = build_drift(spec, g);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const auto x = g.point(j);
    if (std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) >= 0.3) {
      for (int a = 0; a < 3; ++a) ASSERT_EQ(b[a][j], 0.0);
    }
  }
}

TEST(BuildDrift, RejectsInvalidSpecs) {
  DriftSpec spec;
  spec.kind = HardyDrift{};
  EXPECT_THROW(build_drift(spec, TorusGrid(1, 16)), InvalidInput);
  spec.kind = HardyDrift{-1.0, 1, std::nullopt};
  EXPECT_THROW(build_drift(spec, TorusGrid(3, 8)), InvalidInput);
  spec.kind = HardyDrift{1.0, 0, std::nullopt};
  EXPECT_THROW(build_drift(spec, TorusGrid(3, 8)), InvalidInput);
  spec.kind = HardyDrift{};
  spec.cutoff_radius = 0.5;
  EXPECT_THROW(build_drift(spec, TorusGrid(3, 8)), InvalidInput);
}

TEST(BuildDrift, TrigMatchesFormula) {
  const TorusGrid g(2, 16);
  DriftSpec spec;
  spec.kind = TrigDrift{{{TrigMode{0.5, {1, 2}, 0.3}}, {TrigMode{1.0, {0, 1}, 0.0}, TrigMode{-2.0, {3, 0}, 1.0}}}};
  const auto b = build_drift(spec, g);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const auto x = g.point(j);
    EXPECT_NEAR(b[0][j], 0.5 * std::sin(2 * kPi * (x[0] + 2 * x[1]) + 0.3), 1e-14);
    EXPECT_NEAR(b[1][j], std::sin(2 * kPi * x[1]) - 2.0 * std::sin(2 * kPi * 3 * x[0] + 1.0), 1e-14);
  }
}

TEST(BuildDrift, FileRoundTripAndGridMismatch) {
  const TorusGrid g(2, 16);
  const VectorField b({random_band_limited(g, 1), random_band_limited(g, 2)});
  const auto path = std::filesystem::temp_directory_path() / "critdrift_drift_file.bin";
  write_field_binary(path, b);
  DriftSpec spec;
  spec.kind = FileDrift{path};
  const auto back = build_drift(spec, g);
  for (int a = 0; a < 2; ++a) EXPECT_EQ(max_abs_diff(back[a], b[a]), 0.0);
  EXPECT_THROW(build_drift(spec, TorusGrid(2, 32)), InvalidInput);
  std::filesystem::remove(path);
}

TEST(RadialCutoff, SmoothStepFromOneToZero) {
  EXPECT_EQ(radial_cutoff(0.0, 0.4), 1.0);
  EXPECT_EQ(radial_cutoff(0.2, 0.4), 1.0);
  EXPECT_EQ(radial_cutoff(0.4, 0.4), 0.0);
  EXPECT_NEAR(radial_cutoff(0.3, 0.4), 0.5, 1e-15);
  double prev = 1.0;
  for (double r = 0.2; r <= 0.4; r += 0.001) {
    const double v = radial_cutoff(r, 0.4);
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(Morrey, ZeroAndConstantFields) {
  const TorusGrid g(3, 16);
  const std::vector<double> radii = {0.05, 0.1, 0.25};
  EXPECT_EQ(morrey_norm(VectorField(g), 0.5, radii), 0.0);
  DriftSpec spec;
  spec.kind = ConstantDrift{{0.0, 3.0, 4.0}};
  EXPECT_NEAR(morrey_norm(build_drift(spec, g), 0.5, radii), 5.0 * 0.25, 1e-12);
}

TEST(Morrey, MatchesBruteForce) {
  const TorusGrid g(2, 16);
  const VectorField b({random_band_limited(g, 5), random_band_limited(g, 6)});
  const std::vector<double> radii = {0.07, 0.2, 0.5};
  EXPECT_NEAR(morrey_norm(b, 0.5, radii), brute_force_morrey(b, 0.5, radii), 1e-10);
  const auto profile = morrey_profile(b, 1.0, radii);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    EXPECT_NEAR(profile[i], brute_force_morrey(b, 1.0, {radii[i]}), 1e-10);
  }
}

TEST(Morrey, RejectsBadArguments) {
  const TorusGrid g(2, 8);
  const VectorField b(g);
  EXPECT_THROW(morrey_norm(b, 0.5, {}), InvalidInput);
  EXPECT_THROW(morrey_norm(b, 0.0, {0.1}), InvalidInput);
  EXPECT_THROW(morrey_norm(b, 0.5, {0.6}), InvalidInput);
}

TEST(Morrey, HardyEstimateStabilizesUnderRefinement) {
  const std::vector<double> radii = {0.05, 0.1, 0.2};
  const double coarse = morrey_norm(hardy(TorusGrid(3, 32), 4.0), 0.5, radii);
  const double fine = morrey_norm(hardy(TorusGrid(3, 64), 4.0), 0.5, radii);
  EXPECT_NEAR(fine / coarse, 1.0, 0.1);
}

TEST(Mollify, IdentityConstantsAndErrors) {
  const TorusGrid g(3, 16);
  const auto b = hardy(g, 4.0);
  const auto same = mollify_drift(b, 0.0);
  for (int a = 0; a < 3; ++a) EXPECT_LT(max_abs_diff(same[a], b[a]), 1e-14);
  DriftSpec spec;
  spec.kind = ConstantDrift{{1.0, -2.0, 0.5}};
  const auto c = build_drift(spec, g);
  const auto cm = mollify_drift(c, 1e-2);
  for (int a = 0; a < 3; ++a) EXPECT_LT(max_abs_diff(cm[a], c[a]), 1e-14);
  EXPECT_THROW(mollify_drift(b, -1e-3), InvalidInput);
}

TEST(Mollify, ConvergesInL2AsEpsShrinks) {
  const TorusGrid g(3, 32);
  const auto b = hardy(g, 4.0);
  double prev = std::numeric_limits<double>::infinity();
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const auto be = mollify_drift(b, eps);
    std::vector<ScalarField> diff;
    for (int a = 0; a < 3; ++a) diff.push_back(be[a] - b[a]);
    const double err = std::sqrt(drift_l2_squared(VectorField(std::move(diff))));
    EXPECT_LT(err, prev) << eps;
    prev = err;
  }
  EXPECT_LT(prev, 0.5 * std::sqrt(drift_l2_squared(b)));
}

TEST(Mollify, PointwiseDominationBySmoothedSquare) {
  // |E_ε b|² <= E_ε|b|² pointwise (Jensen for the positive heat kernel), hence
  // <|b_ε|² φ²> <= <E_ε|b|² φ²> for every φ.
  const TorusGrid g(3, 32);
  const auto b = hardy(g, 4.0);
  for (double eps : {1e-2, 1e-3}) {
    const auto be = mollify_drift(b, eps);
    const auto lhs_density = be.magnitude_squared();
    const auto rhs_density = heat_semigroup(b.magnitude_squared(), eps);
    const double scale = critdrift::testing::sup_abs(rhs_density);
    for (std::size_t j = 0; j < g.size(); ++j) ASSERT_LE(lhs_density[j], rhs_density[j] + 1e-11 * scale);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      auto phi = random_band_limited(g, seed);
      for (double& v : phi.values()) v *= v;
      EXPECT_LE(inner(lhs_density, phi), inner(rhs_density, phi) + 1e-11 * scale);
    }
  }
}

TEST(DriftNorms, L2AndSup) {
  const TorusGrid g(2, 8);
  DriftSpec spec;
  spec.kind = ConstantDrift{{3.0, 4.0}};
  const auto b = build_drift(spec, g);
  EXPECT_DOUBLE_EQ(drift_l2_squared(b), 25.0);
  EXPECT_DOUBLE_EQ(drift_sup(b), 5.0);
}
