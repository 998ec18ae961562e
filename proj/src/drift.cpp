#include "critdrift/drift.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "critdrift/error.hpp"
#include "critdrift/field_io.hpp"
#include "critdrift/simd.hpp"
#include "critdrift/spectral.hpp"

namespace critdrift {

double radial_cutoff(double r, double cutoff_radius) {
  const double inner = 0.5 * cutoff_radius;
  if (r <= inner) return 1.0;
  if (r >= cutoff_radius) return 0.0;
  const double s = (r - inner) / inner;
  const auto psi = [](double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; };
  const double a = psi(1.0 - s);
  return a / (a + psi(s));
}

namespace {

VectorField build_hardy(const HardyDrift& h, double cutoff, const TorusGrid& grid) {
  const int d = grid.dim();
  if (d < 2) throw InvalidInput("hardy drift needs d >= 2 (the (d-2)/2 factor degenerates in d = 1)");
  if (!(h.delta > 0.0)) throw InvalidInput("hardy drift: delta must be > 0");
  if (h.sign != 1 && h.sign != -1) throw InvalidInput("hardy drift: sign must be +1 or -1");
  const double core = h.core_radius.value_or(2.0 * grid.spacing());
  if (!(core >= 0.0)) throw InvalidInput("hardy drift: core_radius must be >= 0");
  const double coef = h.sign * std::sqrt(h.delta) * 0.5 * (d - 2);
  VectorField b(grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto x = grid.point(j);
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) r2 += x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
    const double r = std::sqrt(r2);
    if (r >= cutoff || r == 0.0) continue;
    const double cap = std::max(r, core);
    const double s = coef * radial_cutoff(r, cutoff) / (cap * cap);
    for (int a = 0; a < d; ++a) b[a][j] = s * x[static_cast<std::size_t>(a)];
  }
  return b;
}

VectorField build_constant(const ConstantDrift& c, const TorusGrid& grid) {
  if (static_cast<int>(c.vector.size()) != grid.dim()) {
    throw InvalidInput("constant drift: vector has " + std::to_string(c.vector.size()) + " entries, grid dim is " +
                       std::to_string(grid.dim()));
  }
  std::vector<ScalarField> comps;
  for (double v : c.vector) comps.emplace_back(grid, v);
  return VectorField(std::move(comps));
}

VectorField build_trig(const TrigDrift& t, const TorusGrid& grid) {
  const int d = grid.dim();
  if (static_cast<int>(t.components.size()) != d) throw InvalidInput("trig drift: need one mode list per component");
  VectorField b(grid);
  const double two_pi = 2.0 * std::numbers::pi;
  for (int a = 0; a < d; ++a) {
    for (const auto& m : t.components[static_cast<std::size_t>(a)]) {
      if (static_cast<int>(m.wavevector.size()) != d) throw InvalidInput("trig drift: wavevector length must equal d");
      for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto x = grid.point(j);
        double phase = m.phase;
        for (int i = 0; i < d; ++i) phase += two_pi * m.wavevector[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        b[a][j] += m.amplitude * std::sin(phase);
      }
    }
  }
  return b;
}

}  // namespace

VectorField build_drift(const DriftSpec& spec, const TorusGrid& grid) {
  if (!(spec.cutoff_radius > 0.0 && spec.cutoff_radius < 0.5)) {
    throw InvalidInput("drift: cutoff_radius must lie in (0, 1/2)");
  }
  return std::visit(
      [&](const auto& kind) -> VectorField {
        using K = std::decay_t<decltype(kind)>;
        if constexpr (std::is_same_v<K, HardyDrift>) {
          return build_hardy(kind, spec.cutoff_radius, grid);
        } else if constexpr (std::is_same_v<K, ConstantDrift>) {
          return build_constant(kind, grid);
        } else if constexpr (std::is_same_v<K, TrigDrift>) {
          return build_trig(kind, grid);
        } else {
          VectorField b = read_vector_field(kind.path);
          if (!(b.grid() == grid)) throw InvalidInput("drift file " + kind.path.string() + " does not match the grid");
          if (!b.all_finite()) throw InvalidInput("drift file " + kind.path.string() + " has non-finite values");
          return b;
        }
      },
      spec.kind);
}

std::vector<double> morrey_profile(const VectorField& b, double eps, const std::vector<double>& radii) {
  if (radii.empty()) throw InvalidInput("morrey_norm: radii must be nonempty");
  if (!(eps > 0.0)) throw InvalidInput("morrey_norm: eps must be > 0");
  for (double r : radii) {
    if (!(r > 0.0 && r <= 0.5)) throw InvalidInput("morrey_norm: radii must lie in (0, 1/2]");
  }
  const TorusGrid& grid = b.grid();
  const double q = 2.0 + eps;
  ScalarField g = b.magnitude_squared();
  for (double& v : g.values()) v = std::pow(v, 0.5 * q);

  auto& sp = spectral_engine(grid);
  auto ghat = sp.make_spectrum();
  sp.forward(g.values(), ghat);
  auto khat = sp.make_spectrum();
  ScalarField kernel(grid);
  ScalarField conv(grid);
  const double h = grid.spacing();
  const int n = grid.n();

  std::vector<double> out;
  out.reserve(radii.size());
  for (double r : radii) {
    // Indicator of the torus ball around offset 0; symmetric, so the circular
    // convolution below is the ball sum around every centre.
    double count = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const auto idx = grid.multi_index(j);
      double dist2 = 0.0;
      for (int a = 0; a < grid.dim(); ++a) {
        int o = idx[static_cast<std::size_t>(a)];
        if (o > n / 2) o -= n;
        dist2 += (o * h) * (o * h);
      }
      const bool in = std::sqrt(dist2) <= r * (1.0 + 1e-12);
      kernel[j] = in ? 1.0 : 0.0;
      count += kernel[j];
    }
    sp.forward(kernel.values(), khat);
    for (std::size_t i = 0; i < khat.size(); ++i) khat[i] *= ghat[i];
    sp.inverse(khat, conv.values());
    const double peak = simd::kernels().max_abs(conv.values().data(), conv.size());
    out.push_back(r * std::pow(peak / count, 1.0 / q));
  }
  return out;
}

double morrey_norm(const VectorField& b, double eps, const std::vector<double>& radii) {
  const auto profile = morrey_profile(b, eps, radii);
  double best = 0.0;
  for (double v : profile) best = std::max(best, v);
  return best;
}

VectorField mollify_drift(const VectorField& b, double eps) {
  if (!(eps >= 0.0)) throw InvalidInput("mollify_drift: eps must be >= 0");
  std::vector<ScalarField> comps;
  for (int a = 0; a < b.dim(); ++a) comps.push_back(heat_semigroup(b[a], eps));
  return VectorField(std::move(comps));
}

double drift_l2_squared(const VectorField& b) { return integrate(b.magnitude_squared()); }

double drift_sup(const VectorField& b) {
  const ScalarField m = b.magnitude_squared();
  return std::sqrt(simd::kernels().max_abs(m.values().data(), m.size()));
}

}  // namespace critdrift
