#include "critdrift/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include "critdrift/error.hpp"
#include "critdrift/simd.hpp"

namespace critdrift {
namespace {

// The FFTW planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

// Plans run on their own SIMD-aligned buffers; callers' arrays are copied in
// and out, which is much cheaper than the unaligned codelets.
struct Spectral::Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
  double* real = nullptr;
  fftw_complex* cplx = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (r2c) fftw_destroy_plan(r2c);
    if (c2r) fftw_destroy_plan(c2r);
    fftw_free(real);
    fftw_free(cplx);
  }
};

Spectral::Spectral(const TorusGrid& grid) : grid_(grid), plans_(std::make_unique<Plans>()) {
  const int d = grid.dim();
  const int n = grid.n();
  const int half = n / 2 + 1;
  spectrum_size_ = static_cast<std::size_t>(half);
  for (int a = 0; a + 1 < d; ++a) spectrum_size_ *= static_cast<std::size_t>(n);

  // FFTW_ESTIMATE keeps the chosen algorithm, and hence the rounding, fixed
  // from run to run.
  int dims[TorusGrid::kMaxDim] = {n, n, n};
  {
    std::lock_guard lock(planner_mutex());
    plans_->real = fftw_alloc_real(grid.size());
    plans_->cplx = fftw_alloc_complex(spectrum_size_);
    if (plans_->real && plans_->cplx) {
      plans_->r2c = fftw_plan_dft_r2c(d, dims, plans_->real, plans_->cplx, FFTW_ESTIMATE);
      plans_->c2r = fftw_plan_dft_c2r(d, dims, plans_->cplx, plans_->real, FFTW_ESTIMATE);
    }
  }
  if (!plans_->r2c || !plans_->c2r) throw NumericalError("FFTW planning failed");

  const double two_pi = 2.0 * std::numbers::pi;
  for (int a = 0; a < d; ++a) {
    derivative_[a].resize(spectrum_size_);
    wavenumber_[a].resize(spectrum_size_);
  }
  k_squared_.resize(spectrum_size_);
  multiplicity_.resize(spectrum_size_);
  band_mask_.resize(spectrum_size_);
  dealias_mask_.resize(spectrum_size_);

  const int dealias_limit = n / 3;
  for (std::size_t idx = 0; idx < spectrum_size_; ++idx) {
    // Decompose idx in the (n, ..., n, half) layout.
    std::size_t rest = idx;
    int m[TorusGrid::kMaxDim] = {0, 0, 0};
    m[d - 1] = static_cast<int>(rest % static_cast<std::size_t>(half));
    rest /= static_cast<std::size_t>(half);
    for (int a = d - 2; a >= 0; --a) {
      m[a] = static_cast<int>(rest % static_cast<std::size_t>(n));
      rest /= static_cast<std::size_t>(n);
    }
    double k2 = 0.0;
    bool band = true;
    bool keep = true;
    for (int a = 0; a < d; ++a) {
      const int k = m[a] <= n / 2 ? m[a] : m[a] - n;
      const bool nyquist = (m[a] == n / 2);
      wavenumber_[a][idx] = k;
      derivative_[a][idx] = nyquist ? 0.0 : two_pi * k;
      k2 += static_cast<double>(k) * k;
      band = band && !nyquist;
      keep = keep && std::abs(k) <= dealias_limit;
    }
    k_squared_[idx] = k2;
    band_mask_[idx] = band ? 1.0 : 0.0;
    dealias_mask_[idx] = keep ? 1.0 : 0.0;
    const int last = m[d - 1];
    multiplicity_[idx] = (last == 0 || last == n / 2) ? 1.0 : 2.0;
  }
}

Spectral::~Spectral() = default;

void Spectral::forward(std::span<const double> in, std::span<Complex> out) {
  if (in.size() != grid_.size() || out.size() != spectrum_size_) {
    throw InvalidInput("Spectral::forward: size mismatch");
  }
  std::copy(in.begin(), in.end(), plans_->real);
  fftw_execute(plans_->r2c);
  const auto* z = reinterpret_cast<const Complex*>(plans_->cplx);
  std::copy(z, z + spectrum_size_, out.begin());
}

void Spectral::inverse(std::span<const Complex> in, std::span<double> out) {
  if (in.size() != spectrum_size_ || out.size() != grid_.size()) {
    throw InvalidInput("Spectral::inverse: size mismatch");
  }
  // Multi-dimensional c2r overwrites its input, so it only ever sees the copy.
  std::copy(in.begin(), in.end(), reinterpret_cast<Complex*>(plans_->cplx));
  fftw_execute(plans_->c2r);
  const double scale = 1.0 / static_cast<double>(grid_.size());
  const double* r = plans_->real;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r[i] * scale;
}

void Spectral::multiply(std::span<Complex> z, std::span<const double> m) {
  simd::kernels().scale_complex(reinterpret_cast<double*>(z.data()), m.data(), z.size());
}

double Spectral::inner(std::span<const Complex> a, std::span<const Complex> b) const {
  return weighted_inner(a, b, {});
}

double Spectral::weighted_inner(std::span<const Complex> a, std::span<const Complex> b,
                                std::span<const double> m) const {
  // Re(a conj b) = a.re b.re + a.im b.im; lay the weight out per double.
  thread_local std::vector<double> w;
  w.resize(2 * spectrum_size_);
  for (std::size_t i = 0; i < spectrum_size_; ++i) {
    const double v = m.empty() ? multiplicity_[i] : m[i] * multiplicity_[i];
    w[2 * i] = v;
    w[2 * i + 1] = v;
  }
  const double s = simd::kernels().dot3(reinterpret_cast<const double*>(a.data()),
                                        reinterpret_cast<const double*>(b.data()), w.data(), 2 * spectrum_size_);
  const double nn = static_cast<double>(grid_.size());
  return s / (nn * nn);
}

Spectral& spectral_engine(const TorusGrid& grid) {
  thread_local std::map<std::pair<int, int>, std::unique_ptr<Spectral>> cache;
  auto& slot = cache[{grid.dim(), grid.n()}];
  if (!slot) slot = std::make_unique<Spectral>(grid);
  return *slot;
}

}  // namespace critdrift

namespace critdrift {

ScalarField spectral_resample(const ScalarField& f, const TorusGrid& target) {
  const TorusGrid& src = f.grid();
  if (src.dim() != target.dim()) throw InvalidInput("spectral_resample: dimension mismatch");
  if (src == target) return f;
  auto& sp_src = spectral_engine(src);
  auto fhat = sp_src.make_spectrum();
  sp_src.forward(f.values(), fhat);
  auto& sp_dst = spectral_engine(target);
  auto ghat = sp_dst.make_spectrum();
  const int d = src.dim();
  const int ns = src.n();
  const int nt = target.n();
  const int keep = std::min(ns, nt) / 2;  // |k| < keep on every axis
  const double scale = static_cast<double>(target.size()) / static_cast<double>(src.size());
  const auto band = sp_src.band_mask();
  for (std::size_t i = 0; i < fhat.size(); ++i) {
    if (band[i] == 0.0) continue;
    std::size_t idx = 0;
    bool ok = true;
    for (int a = 0; a < d; ++a) {
      const int k = static_cast<int>(sp_src.wavenumber(a)[i]);
      if (std::abs(k) >= keep) {
        ok = false;
        break;
      }
      const int extent = (a == d - 1) ? nt / 2 + 1 : nt;
      const int pos = (a == d - 1) ? k : (k >= 0 ? k : k + nt);
      idx = idx * static_cast<std::size_t>(extent) + static_cast<std::size_t>(pos);
    }
    if (ok) ghat[idx] = fhat[i] * scale;
  }
  ScalarField g(target);
  sp_dst.inverse(ghat, g.values());
  return g;
}

}  // namespace critdrift
