#pragma once
// Uniform periodic grids on the unit torus [-1/2, 1/2)^d and the real-valued
// fields that live on them.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace critdrift {

class TorusGrid {
 public:
  static constexpr int kMaxDim = 3;

  /// dim in {1,2,3}; n even and >= 8.
  TorusGrid(int dim, int n);

  int dim() const { return dim_; }
  int n() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  std::size_t size() const { return size_; }
  /// Quadrature weight h^d; the weights sum to exactly 1.
  double weight() const { return 1.0 / static_cast<double>(size_); }

  /// Coordinate of index j along any axis: -1/2 + j h.
  double coordinate(int j) const { return -0.5 + j * spacing(); }

  /// Row-major multi-index of a flat index (axis 0 slowest). Unused axes are 0.
  std::array<int, kMaxDim> multi_index(std::size_t flat) const;
  /// Physical point of a flat index. Unused axes are 0.
  std::array<double, kMaxDim> point(std::size_t flat) const;

  bool operator==(const TorusGrid&) const = default;

 private:
  int dim_;
  int n_;
  std::size_t size_;
};

class ScalarField {
 public:
  explicit ScalarField(const TorusGrid& grid);
  ScalarField(const TorusGrid& grid, double value);
  ScalarField(const TorusGrid& grid, std::vector<double> values);

  /// Samples fn(x) with x = point(j) at every grid point.
  template <typename Fn>
  static ScalarField sample(const TorusGrid& grid, Fn&& fn) {
    ScalarField f(grid);
    for (std::size_t j = 0; j < grid.size(); ++j) f.values_[j] = fn(grid.point(j));
    return f;
  }

  const TorusGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t j) { return values_[j]; }
  double operator[](std::size_t j) const { return values_[j]; }

  bool all_finite() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator*=(double s);

 private:
  TorusGrid grid_;
  std::vector<double> values_;
};

ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);

class VectorField {
 public:
  /// Zero field with grid.dim() components.
  explicit VectorField(const TorusGrid& grid);
  explicit VectorField(std::vector<ScalarField> components);

  const TorusGrid& grid() const { return grid_; }
  int dim() const { return static_cast<int>(components_.size()); }
  ScalarField& operator[](int axis) { return components_[static_cast<std::size_t>(axis)]; }
  const ScalarField& operator[](int axis) const { return components_[static_cast<std::size_t>(axis)]; }

  /// Pointwise |b|^2.
  ScalarField magnitude_squared() const;
  bool all_finite() const;

 private:
  TorusGrid grid_;
  std::vector<ScalarField> components_;
};

/// <f> = h^d Σ f(x_j). Rejects non-finite input.
double integrate(const ScalarField& f);

/// <f g> without the finiteness scan (hot paths).
double inner(const ScalarField& f, const ScalarField& g);

/// Spectral gradient: mode k times 2πi k_axis, Nyquist mode zeroed.
VectorField gradient(const ScalarField& f);

/// Spectral divergence with the same multiplier convention as gradient().
ScalarField divergence(const VectorField& b);

/// Spectral Laplacian: mode k times -4π²|k|².
ScalarField laplacian(const ScalarField& f);

/// Heat semigroup e^{εΔ}: mode k times exp(-4π²|k|² ε). ε = 0 is the identity.
ScalarField heat_semigroup(const ScalarField& f, double eps);

/// (<|f|^p>)^{1/p}; p = +inf gives max |f|. p < 1 is rejected.
double lp_norm(const ScalarField& f, double p);

/// <|∇f|^2> evaluated in Fourier space (equals integrate(|gradient(f)|^2)).
double dirichlet_energy(const ScalarField& f);

}  // namespace critdrift
