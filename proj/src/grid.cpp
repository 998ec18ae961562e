#include "critdrift/grid.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "critdrift/error.hpp"
#include "critdrift/simd.hpp"
#include "critdrift/spectral.hpp"

namespace critdrift {

TorusGrid::TorusGrid(int dim, int n) : dim_(dim), n_(n) {
  if (dim < 1 || dim > kMaxDim) throw InvalidInput("TorusGrid: dim must be 1, 2 or 3, got " + std::to_string(dim));
  if (n < 8 || n % 2 != 0) throw InvalidInput("TorusGrid: n must be even and >= 8, got " + std::to_string(n));
  size_ = 1;
  for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(n);
}

std::array<int, TorusGrid::kMaxDim> TorusGrid::multi_index(std::size_t flat) const {
  std::array<int, kMaxDim> idx{0, 0, 0};
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % static_cast<std::size_t>(n_));
    flat /= static_cast<std::size_t>(n_);
  }
  return idx;
}

std::array<double, TorusGrid::kMaxDim> TorusGrid::point(std::size_t flat) const {
  const auto idx = multi_index(flat);
  std::array<double, kMaxDim> x{0.0, 0.0, 0.0};
  for (int a = 0; a < dim_; ++a) x[static_cast<std::size_t>(a)] = coordinate(idx[static_cast<std::size_t>(a)]);
  return x;
}

ScalarField::ScalarField(const TorusGrid& grid) : grid_(grid), values_(grid.size(), 0.0) {}

ScalarField::ScalarField(const TorusGrid& grid, double value) : grid_(grid), values_(grid.size(), value) {}

ScalarField::ScalarField(const TorusGrid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid.size()) throw InvalidInput("ScalarField: value count does not match grid");
}

bool ScalarField::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

void require_same_grid(const TorusGrid& a, const TorusGrid& b) {
  if (!(a == b)) throw InvalidInput("fields live on different grids");
}

void require_finite(const ScalarField& f, const char* what) {
  if (!f.all_finite()) throw InvalidInput(std::string(what) + ": field contains non-finite values");
}

}  // namespace

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_);
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] += o.values_[j];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  require_same_grid(grid_, o.grid_);
  for (std::size_t j = 0; j < values_.size(); ++j) values_[j] -= o.values_[j];
  return *this;
}

ScalarField& ScalarField::operator*=(double s) {
  for (double& v : values_) v *= s;
  return *this;
}

ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

VectorField::VectorField(const TorusGrid& grid) : grid_(grid) {
  components_.assign(static_cast<std::size_t>(grid.dim()), ScalarField(grid));
}

VectorField::VectorField(std::vector<ScalarField> components)
    : grid_(components.empty() ? throw InvalidInput("VectorField: no components") : components.front().grid()),
      components_(std::move(components)) {
  if (static_cast<int>(components_.size()) != grid_.dim()) {
    throw InvalidInput("VectorField: component count must equal grid dimension");
  }
  for (const auto& c : components_) require_same_grid(grid_, c.grid());
}

ScalarField VectorField::magnitude_squared() const {
  ScalarField out(grid_);
  const auto& k = simd::kernels();
  for (const auto& c : components_) {
    k.mul_add(c.values().data(), c.values().data(), out.values().data(), out.size());
  }
  return out;
}

bool VectorField::all_finite() const {
  for (const auto& c : components_) {
    if (!c.all_finite()) return false;
  }
  return true;
}

double integrate(const ScalarField& f) {
  require_finite(f, "integrate");
  return simd::kernels().sum(f.values().data(), f.size()) * f.grid().weight();
}

double inner(const ScalarField& f, const ScalarField& g) {
  require_same_grid(f.grid(), g.grid());
  return simd::kernels().dot(f.values().data(), g.values().data(), f.size()) * f.grid().weight();
}

VectorField gradient(const ScalarField& f) {
  require_finite(f, "gradient");
  auto& sp = spectral_engine(f.grid());
  auto fhat = sp.make_spectrum();
  auto work = sp.make_spectrum();
  sp.forward(f.values(), fhat);
  VectorField g(f.grid());
  const auto& k = simd::kernels();
  for (int a = 0; a < f.grid().dim(); ++a) {
    k.scale_complex_imag(reinterpret_cast<const double*>(fhat.data()), sp.derivative_symbol(a).data(),
                         reinterpret_cast<double*>(work.data()), work.size());
    sp.inverse(work, g[a].values());
  }
  return g;
}

ScalarField divergence(const VectorField& b) {
  if (!b.all_finite()) throw InvalidInput("divergence: field contains non-finite values");
  auto& sp = spectral_engine(b.grid());
  auto bhat = sp.make_spectrum();
  auto acc = sp.make_spectrum();
  auto work = sp.make_spectrum();
  const auto& k = simd::kernels();
  for (int a = 0; a < b.dim(); ++a) {
    sp.forward(b[a].values(), bhat);
    k.scale_complex_imag(reinterpret_cast<const double*>(bhat.data()), sp.derivative_symbol(a).data(),
                         reinterpret_cast<double*>(work.data()), work.size());
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += work[i];
  }
  ScalarField out(b.grid());
  sp.inverse(acc, out.values());
  return out;
}

namespace {

template <typename Symbol>
ScalarField apply_multiplier(const ScalarField& f, Symbol&& symbol) {
  auto& sp = spectral_engine(f.grid());
  auto fhat = sp.make_spectrum();
  sp.forward(f.values(), fhat);
  std::vector<double> m(sp.spectrum_size());
  const auto k2 = sp.k_squared();
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = symbol(k2[i]);
  Spectral::multiply(fhat, m);
  ScalarField out(f.grid());
  sp.inverse(fhat, out.values());
  return out;
}

}  // namespace

ScalarField laplacian(const ScalarField& f) {
  require_finite(f, "laplacian");
  const double c = -4.0 * std::numbers::pi * std::numbers::pi;
  return apply_multiplier(f, [c](double k2) { return c * k2; });
}

ScalarField heat_semigroup(const ScalarField& f, double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw InvalidInput("heat_semigroup: eps must be finite and >= 0");
  require_finite(f, "heat_semigroup");
  if (eps == 0.0) return f;
  const double c = -4.0 * std::numbers::pi * std::numbers::pi * eps;
  return apply_multiplier(f, [c](double k2) { return std::exp(c * k2); });
}

double lp_norm(const ScalarField& f, double p) {
  if (std::isnan(p) || p < 1.0) throw InvalidInput("lp_norm: p must be >= 1");
  require_finite(f, "lp_norm");
  const auto& k = simd::kernels();
  const double sup = k.max_abs(f.values().data(), f.size());
  if (std::isinf(p)) return sup;
  if (sup == 0.0) return 0.0;
  if (p == 2.0) return std::sqrt(k.dot(f.values().data(), f.values().data(), f.size()) * f.grid().weight());
  // Normalise by the sup so |f|^p cannot overflow for large p.
  std::vector<double> powed(f.size());
  const double inv = 1.0 / sup;
  if (p == std::floor(p) && p <= 16.0) {
    const int ip = static_cast<int>(p);
    for (std::size_t j = 0; j < f.size(); ++j) {
      const double x = std::fabs(f[j]) * inv;
      double r = 1.0;
      for (int i = 0; i < ip; ++i) r *= x;
      powed[j] = r;
    }
  } else {
    for (std::size_t j = 0; j < f.size(); ++j) powed[j] = std::pow(std::fabs(f[j]) * inv, p);
  }
  const double mean = k.sum(powed.data(), powed.size()) * f.grid().weight();
  return sup * std::pow(mean, 1.0 / p);
}

double dirichlet_energy(const ScalarField& f) {
  require_finite(f, "dirichlet_energy");
  auto& sp = spectral_engine(f.grid());
  auto fhat = sp.make_spectrum();
  sp.forward(f.values(), fhat);
  // |2π k̃|^2 with the Nyquist component dropped, matching gradient().
  std::vector<double> symbol(sp.spectrum_size(), 0.0);
  for (int a = 0; a < f.grid().dim(); ++a) {
    const auto da = sp.derivative_symbol(a);
    for (std::size_t i = 0; i < symbol.size(); ++i) symbol[i] += da[i] * da[i];
  }
  return sp.weighted_inner(fhat, fhat, symbol);
}

}  // namespace critdrift
