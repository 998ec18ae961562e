#pragma once
// Drift fields on the torus: construction, the discrete Morrey estimator and
// heat-semigroup mollification.

#include <filesystem>
#include <optional>
#include <variant>
#include <vector>

#include "critdrift/grid.hpp"

namespace critdrift {

/// ±√δ (d-2)/2 · x / max(|x|, core)², cut off smoothly before the cell
/// boundary. sign = +1 gives the field whose flow -b points at the origin.
struct HardyDrift {
  double delta = 4.0;
  int sign = +1;
  /// Defaults to 2h of the target grid.
  std::optional<double> core_radius;
};

struct ConstantDrift {
  std::vector<double> vector;
};

/// One term amplitude · sin(2π k·x + phase) of a trig drift component.
struct TrigMode {
  double amplitude = 0.0;
  std::vector<int> wavevector;
  double phase = 0.0;
};

struct TrigDrift {
  /// components[a] lists the modes summed into component a.
  std::vector<std::vector<TrigMode>> components;
};

struct FileDrift {
  std::filesystem::path path;
};

struct DriftSpec {
  std::variant<HardyDrift, ConstantDrift, TrigDrift, FileDrift> kind;
  /// Support radius of the periodizing cutoff for the Hardy variant; χ = 1 on
  /// |x| <= cutoff_radius / 2 and χ = 0 for |x| >= cutoff_radius.
  double cutoff_radius = 0.4;
};

VectorField build_drift(const DriftSpec& spec, const TorusGrid& grid);

/// Smooth radial cutoff used for the Hardy variant.
double radial_cutoff(double r, double cutoff_radius);

/// sup over grid centres and the given radii of r · (ball mean of |b|^{2+ε})^{1/(2+ε)},
/// balls in the torus metric, means by point counting.
double morrey_norm(const VectorField& b, double eps, const std::vector<double>& radii);

/// Per-radius maxima behind morrey_norm (same order as radii).
std::vector<double> morrey_profile(const VectorField& b, double eps, const std::vector<double>& radii);

/// Componentwise e^{εΔ} b.
VectorField mollify_drift(const VectorField& b, double eps);

/// ||b||_2^2 = <|b|^2>.
double drift_l2_squared(const VectorField& b);

/// Largest pointwise |b|.
double drift_sup(const VectorField& b);

}  // namespace critdrift
