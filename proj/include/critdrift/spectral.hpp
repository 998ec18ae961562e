#pragma once
// FFT plans and Fourier-multiplier tables for one TorusGrid.
//
// Spectra use FFTW's real-to-complex half layout: shape (n, ..., n, n/2+1).
// forward() is the unnormalized DFT; inverse() includes the 1/N factor, so
// inverse(forward(f)) == f.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "critdrift/grid.hpp"

namespace critdrift {

class Spectral {
 public:
  using Complex = std::complex<double>;

  explicit Spectral(const TorusGrid& grid);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  const TorusGrid& grid() const { return grid_; }
  std::size_t spectrum_size() const { return spectrum_size_; }
  std::vector<Complex> make_spectrum() const { return std::vector<Complex>(spectrum_size_); }

  void forward(std::span<const double> in, std::span<Complex> out);
  void inverse(std::span<const Complex> in, std::span<double> out);

  /// Derivative symbol 2π k_axis per mode, zero on the Nyquist index.
  std::span<const double> derivative_symbol(int axis) const { return derivative_[static_cast<std::size_t>(axis)]; }
  /// Signed integer wavenumber k_axis per mode (Nyquist kept as +n/2).
  std::span<const double> wavenumber(int axis) const { return wavenumber_[static_cast<std::size_t>(axis)]; }
  /// |k|^2 per mode, Nyquist included.
  std::span<const double> k_squared() const { return k_squared_; }
  /// Multiplicity of each half-spectrum mode in the full spectrum (1 or 2).
  std::span<const double> multiplicity() const { return multiplicity_; }
  /// 1 on modes with every |k_axis| < n/2 (no Nyquist component), else 0.
  std::span<const double> band_mask() const { return band_mask_; }
  /// 1 on modes kept by the 2/3 rule (every |k_axis| <= n/3), else 0.
  std::span<const double> dealias_mask() const { return dealias_mask_; }

  /// Elementwise z_k *= m_k.
  static void multiply(std::span<Complex> z, std::span<const double> m);

  /// <a b> computed from the spectra of a and b (Parseval).
  double inner(std::span<const Complex> a, std::span<const Complex> b) const;
  /// Σ m_k Re(a_k conj b_k) / N^2 over the full spectrum; an empty m means m = 1.
  double weighted_inner(std::span<const Complex> a, std::span<const Complex> b, std::span<const double> m) const;

 private:
  TorusGrid grid_;
  std::size_t spectrum_size_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
  std::vector<double> derivative_[TorusGrid::kMaxDim];
  std::vector<double> wavenumber_[TorusGrid::kMaxDim];
  std::vector<double> k_squared_;
  std::vector<double> multiplicity_;
  std::vector<double> band_mask_;
  std::vector<double> dealias_mask_;
};

/// Per-thread cached engine for a grid. The reference stays valid for the
/// lifetime of the calling thread.
Spectral& spectral_engine(const TorusGrid& grid);

/// Trigonometric interpolation of f onto another grid of the same dimension.
/// Modes resolved by both grids are copied, the rest are zero; Nyquist modes
/// of the source are dropped so the result is real and symmetric.
ScalarField spectral_resample(const ScalarField& f, const TorusGrid& target);

}  // namespace critdrift
