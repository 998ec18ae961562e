#pragma once
// Data-parallel inner loops used by the spectral, Orlicz and diagnostic code.
//
// Every kernel has a scalar reference implementation and an AVX2+FMA variant.
// The active table is chosen once at startup from CPUID; the environment
// variable CRITDRIFT_SIMD=scalar forces the reference path. Reductions use
// Neumaier compensated summation in both variants, so the two agree to a few
// ulps and results do not depend on the lane layout in any meaningful way.

#include <cstddef>
#include <span>
#include <string_view>

namespace critdrift::simd {

enum class Backend { scalar, avx2 };

struct KernelTable {
  std::string_view name;

  // Σ x_i
  double (*sum)(const double* x, std::size_t n);
  // Σ x_i y_i
  double (*dot)(const double* x, const double* y, std::size_t n);
  // Σ x_i y_i z_i
  double (*dot3)(const double* x, const double* y, const double* z, std::size_t n);
  // max |x_i|; NaN propagates.
  double (*max_abs)(const double* x, std::size_t n);
  // Σ Φ(x_i · scale) with Φ(y) = cosh(y) - 1, evaluated without cancellation.
  double (*phi_sum)(const double* x, std::size_t n, double scale);
  // out_i = Φ(x_i)
  void (*phi)(const double* x, double* out, std::size_t n);
  // out_i = exp(x_i)
  void (*exp)(const double* x, double* out, std::size_t n);
  // out_i = x_i · y_i
  void (*mul)(const double* x, const double* y, double* out, std::size_t n);
  // acc_i += x_i · y_i
  void (*mul_add)(const double* x, const double* y, double* acc, std::size_t n);
  // z_k *= m_k for interleaved complex z (2n doubles) and real multiplier m (n doubles)
  void (*scale_complex)(double* z, const double* m, std::size_t n);
  // out_k = i·m_k·z_k for interleaved complex z, out
  void (*scale_complex_imag)(const double* z, const double* m, double* out, std::size_t n);
};

bool backend_available(Backend b);

/// Kernel table for an explicit backend. Throws std::runtime_error when the
/// CPU does not support it.
const KernelTable& kernels(Backend b);

/// Currently selected kernel table.
const KernelTable& kernels();

/// Overrides the runtime selection (tests and the CLI use this).
void select_backend(Backend b);
Backend active_backend();

// Scalar reference math shared by both variants' tails.
double phi_scalar(double y);

}  // namespace critdrift::simd
